"""
Bundle and dataset file formats
"""

from .dataset_io import (read_dataset, write_dataset, append_record, init_dataset_file,
                         read_shapes, write_shapes, read_metadata, write_metadata)
from .bundle_io import ModelBundle, save_bundle, load_bundle, FORMAT_VERSION, CONF_NAME

__all__ = ['read_dataset', 'write_dataset', 'append_record', 'init_dataset_file', 'read_shapes',
           'write_shapes', 'read_metadata', 'write_metadata', 'ModelBundle', 'save_bundle',
           'load_bundle', 'FORMAT_VERSION', 'CONF_NAME']
