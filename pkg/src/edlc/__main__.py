import sys

from edlc.cli import main

sys.exit(main())
