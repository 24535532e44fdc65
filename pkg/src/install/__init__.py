"""
Install-time training workflow
"""

from .workflow import train_bundle, run_install, prepare_shapes, publish_install

__all__ = ['train_bundle', 'run_install', 'prepare_shapes', 'publish_install']
