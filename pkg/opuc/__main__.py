import sys

from opuc.runner import main

sys.exit(main())
