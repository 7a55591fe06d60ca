import sys

from sparsephase.cli import main

sys.exit(main())
