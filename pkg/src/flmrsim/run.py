"""Run the flmr command-line tool."""
import sys

from flmrsim.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
