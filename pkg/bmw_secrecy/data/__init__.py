"""Result tables and CSV persistence."""

from .storage import (
    ResultTable,
    format_value,
    generate_result_name,
    get_results_dir,
    list_results,
    read_csv,
    write_csv,
)

__all__ = [
    "ResultTable",
    "format_value",
    "generate_result_name",
    "get_results_dir",
    "list_results",
    "read_csv",
    "write_csv",
]
