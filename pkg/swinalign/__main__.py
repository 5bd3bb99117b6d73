import sys

from swinalign.cli import main

sys.exit(main())
