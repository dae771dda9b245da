import sys

from sympidx.cli import main

sys.exit(main())
