import sys

from polopt.main import main

if __name__ == "__main__":
    sys.exit(main())
