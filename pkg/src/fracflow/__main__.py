import sys

from fracflow.cli import main

sys.exit(main())
