"""
Command-line surface
"""

from .commands import main, build_parser, parse_int_list

__all__ = ['main', 'build_parser', 'parse_int_list']
