from espfix.cli import main
import sys

sys.exit(main())
