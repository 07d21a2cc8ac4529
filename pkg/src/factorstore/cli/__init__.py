"""Command-line interface for factorstore."""

from factorstore.cli.main import main

__all__ = ["main"]
