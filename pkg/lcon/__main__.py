import sys

from lcon.cli import main

sys.exit(main())
