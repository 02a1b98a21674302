import sys

from divexp.harness.cli import main

sys.exit(main())
