import sys

from pitchguard.cli.app import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
