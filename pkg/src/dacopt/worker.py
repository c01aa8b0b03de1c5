"""Clean ``python -m dacopt.worker`` entry for the built-in workers.

Running ``dacopt.external`` with ``-m`` works too but trips Python's
double-import warning, since the package initializer already imports that
module. This shim is imported by nothing, so it stays quiet.
"""

import sys

from dacopt.external import main

if __name__ == "__main__":
    sys.exit(main())
