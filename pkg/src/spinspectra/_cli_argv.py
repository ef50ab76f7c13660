import sys

import spinspectra


def cli_argv():
    sys.exit(spinspectra.cli(command_line_args=sys.argv[1:]))
