import sys

from cdbench.runner.cli import main

sys.exit(main())
