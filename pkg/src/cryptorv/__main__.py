import sys

from cryptorv.bench import main

sys.exit(main())
