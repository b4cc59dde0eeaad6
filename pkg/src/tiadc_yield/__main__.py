import sys

from tiadc_yield.cli.main import main

sys.exit(main())
