#!/usr/bin/env python3
"""moser-modulus - random Lipschitz graphs, density experiments and curve moduli
Entry point for the command line.
"""

import sys

from moser_modulus.cli import main as cli_main
from moser_modulus.logging_config import get_logger

# Set up structured logger for this module
logger = get_logger(__name__)


def main() -> None:
    """Main entry point with error handling."""
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        logger.info("run_interrupted_by_user")
        sys.exit(130)


if __name__ == "__main__":
    main()
