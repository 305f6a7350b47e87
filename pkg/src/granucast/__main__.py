"""Entry point for ``python -m granucast``."""

import sys

from .cli import main

sys.exit(main())
