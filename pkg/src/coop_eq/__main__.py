import sys

from coop_eq.cli import main

sys.exit(main())
