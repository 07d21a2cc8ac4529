"""Main entry point for factorstore."""

import sys

from factorstore.cli.main import main


if __name__ == "__main__":
    sys.exit(main())
