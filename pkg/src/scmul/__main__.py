"""Allow ``python -m scmul`` as an alias for the ``scmul`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
