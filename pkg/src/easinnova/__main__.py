import sys

from easinnova.cli import main

sys.exit(main())
