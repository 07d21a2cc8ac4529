"""Console reporter for command output.

Tables and status lines go through one rich console so the CLI and tests
can redirect them together.
"""

from typing import Optional

from rich.console import Console
from rich.markup import escape
from rich.table import Table


class Reporter:
    """Renders status messages and tables."""

    def __init__(self, console: Optional[Console] = None):
        """Initialize reporter.

        Args:
            console: Target console (defaults to stdout)
        """
        self.console = console or Console()

    def display_info(self, message: str) -> None:
        """Display info message.

        Args:
            message: Info message
        """
        self.console.print(f"[cyan]ℹ[/cyan] {message}")

    def display_warning(self, message: str) -> None:
        """Display warning message."""
        self.console.print(f"[yellow]⚠[/yellow] {message}")

    def display_error(self, message: str) -> None:
        """Display error message.

        Args:
            message: Error message
        """
        self.console.print(f"[red]✗[/red] {escape(message)}", highlight=False)

    def display_success(self, message: str) -> None:
        self.console.print(f"[green]✓[/green] {message}")

    def display_table(self, table: Table) -> None:
        """Render a rich table."""
        self.console.print(table)
