import sys

from branchsim.harness.main import main

sys.exit(main())
