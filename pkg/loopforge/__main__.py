import sys

from loopforge.main import main

sys.exit(main())
