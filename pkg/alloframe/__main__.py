import sys
from alloframe.cli import main

sys.exit(main())
