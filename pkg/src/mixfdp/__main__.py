import sys

from mixfdp.cli import main

sys.exit(main())
