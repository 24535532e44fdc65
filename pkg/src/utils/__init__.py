"""
Shared utilities: configuration, console output, host introspection
"""

from .config_loader import load_config, DEFAULT_CONFIG_PATH
from .host import logical_cores, physical_cores, host_descriptor

__all__ = ['load_config', 'DEFAULT_CONFIG_PATH', 'logical_cores', 'physical_cores',
           'host_descriptor']
