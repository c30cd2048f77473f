"""Entry point for direct execution."""

from bmw_secrecy.cli import cli

if __name__ == "__main__":
    cli()
