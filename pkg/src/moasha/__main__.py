import sys

from moasha.cli import main

sys.exit(main())
