import logging
import sys

from ambient_gym.cli import run_cli

logging.basicConfig(stream=sys.stderr, level=logging.WARNING)


if __name__ == '__main__':
    sys.exit(run_cli(sys.argv[1:]))
