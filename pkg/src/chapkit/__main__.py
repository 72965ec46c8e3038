import sys

from chapkit.cli import main

sys.exit(main())
