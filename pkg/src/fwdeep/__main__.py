import sys

from fwdeep.cli import main

sys.exit(main())
