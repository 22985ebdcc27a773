from driftlab.cli import main
import sys

sys.exit(main())
