"""BMW-Secrecy: Block-Markov Wyner secrecy toolkit for fading channels with an active eavesdropper."""

__version__ = "0.2.0"
