#!/usr/bin/env python3
"""
Main entry point for the ctnet package.
`python -m ctnet <command> ...` runs the CLI; without a command it prints an overview.
"""

import sys

from . import __version__, __description__


def main() -> int:
    """Main entry point for package invocation."""
    if len(sys.argv) > 1:
        from ctnet.cli.main import main as cli_main

        return cli_main(sys.argv[1:])

    print(f"ctnet v{__version__}")
    print(f"{__description__}")
    print()
    print("Available commands:")
    print("  ctnet analyze     - Count MACs/parameters, reproduce ablation cost tables")
    print("  ctnet verify      - Run equivalence/gradient/degeneration/interaction suites")
    print("  ctnet probe-rf    - Probe the spatial-temporal interact field of a module")
    print("  ctnet train-toy   - Train a toy network on a synthetic video task")
    print()
    print("Run `ctnet <command> --help` for the flags of each command.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
