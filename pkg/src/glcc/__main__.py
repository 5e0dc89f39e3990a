import sys

from glcc.cli import main

sys.exit(main())
