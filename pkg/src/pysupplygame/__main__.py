import sys

from pysupplygame.cli import main

sys.exit(main())
