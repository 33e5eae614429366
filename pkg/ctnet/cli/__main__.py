"""Allow `python -m ctnet.cli <command>`."""

import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
