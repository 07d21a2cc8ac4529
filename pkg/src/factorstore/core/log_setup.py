"""Logging setup for the command-line entry point."""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler


def setup_logging(
    level: str = "WARNING", log_file: Optional[str] = None, debug: bool = False
) -> None:
    """
    Configure root logging with a rich stderr handler.

    Args:
        level: Logging level name
        log_file: Optional path for a plain-text log file
        debug: Force DEBUG level and show tracebacks
    """
    if debug:
        level = "DEBUG"

    handlers: list = [
        RichHandler(
            console=Console(stderr=True),
            show_path=debug,
            rich_tracebacks=debug,
        )
    ]
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        handlers.append(file_handler)

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(message)s",
        datefmt="[%X]",
        handlers=handlers,
        force=True,
    )
