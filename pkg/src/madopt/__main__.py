import sys

from madopt.cli import main

sys.exit(main())
