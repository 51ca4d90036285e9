"""
Command-line front end: instance files, generators, the verify suite and command dispatch.
"""

from .commands import COMMANDS, CommandReport, CommandRunner, build_parser
from .generator import KINDS, generate
from .instance_format import InstanceFile, parse_instance, serialize_instance

__all__ = ['COMMANDS', 'CommandReport', 'CommandRunner', 'build_parser', 'KINDS', 'generate',
           'InstanceFile', 'parse_instance', 'serialize_instance']
