"""
Backend manager - creates backends from configuration
"""

from typing import Dict

from src.errors import ConfigError
from .base import GemmBackend
from .native import NativeBackend


def create_backend(backend_config: Dict) -> GemmBackend:
    """
    Create the GEMM backend named by the configuration.

    Args:
        backend_config: The 'backend' section of the ADSALA configuration

    Returns:
        GemmBackend instance
    """
    backend_type = str(backend_config.get('type', 'native')).lower()

    if backend_type == 'native':
        return NativeBackend(
            block_mc=backend_config.get('block_mc', 128),
            block_kc=backend_config.get('block_kc', 256),
            block_nc=backend_config.get('block_nc', 512),
            affinity=backend_config.get('affinity', 'none'),
        )
    else:
        raise ConfigError(f"Unsupported backend type: {backend_type}")

