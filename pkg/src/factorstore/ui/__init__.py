"""Rich terminal output for the command-line interface."""

from factorstore.ui.reporter import Reporter
from factorstore.ui.tables import TableViews

__all__ = ["Reporter", "TableViews"]
