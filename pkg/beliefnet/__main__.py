import sys

from beliefnet.cli import main

sys.exit(main())
