"""
Exit codes and parser shared by the wires commands.
"""
import logging
import sys

from django.core.management.base import BaseCommand, CommandError, CommandParser

USAGE_ERROR = 1
IO_ERROR = 2
INTERNAL_ERROR = 3


def set_verbosity(verbosity):
    if verbosity >= 2:
        for name in ('catenary', 'wires'):
            logging.getLogger(name).setLevel(logging.DEBUG)


class UsageErrorParser(CommandParser):
    """Argument errors exit with USAGE_ERROR instead of argparse's 2."""

    def error(self, message):
        if self.called_from_command_line:
            self.print_usage(sys.stderr)
            self.exit(USAGE_ERROR, f'{self.prog}: error: {message}\n')
        raise CommandError(f'Error: {message}', returncode=USAGE_ERROR)


class WireCommand(BaseCommand):
    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.__class__ = UsageErrorParser
        return parser
