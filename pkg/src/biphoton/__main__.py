import sys

from biphoton.cli import main

sys.exit(main())
