"""Entry point for python -m deconfuse."""

import sys

from .cli import main

sys.exit(main())
