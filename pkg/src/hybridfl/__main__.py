import sys

from hybridfl.cli import main

sys.exit(main())
