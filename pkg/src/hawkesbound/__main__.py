import sys

from hawkesbound.cli import main

sys.exit(main())
