import sys

from threshold_kit.cli import main

sys.exit(main())
