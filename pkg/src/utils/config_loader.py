"""
Configuration loading utilities
"""

import copy
import os
import yaml
from pathlib import Path
from typing import Dict, Optional

from src.errors import ConfigError

# Default config path
DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / "config" / "adsala.yaml"

AFFINITY_POLICIES = ('cores', 'threads', 'none')

DEFAULT_CONFIG: Dict = {
    'backend': {
        'type': 'native',
        'affinity': 'cores',
        'block_mc': 128,
        'block_kc': 256,
        'block_nc': 512,
        'alignment': 64,
    },
    'sampler': {
        'bases': [2, 3, 4],
        'scramble_seed': 20230501,
        'dim_min': 16,
        'dim_max': None,
        'mem_cap_mb': 500,
        'precision': 'single',
        'mapping': 'square',
    },
    'harness': {
        'repeats': 10,
        'warmup': 1,
        'statistic': 'median',
        'isolation': 'subprocess',
        'thread_grid': None,
        'max_skip_fraction': 0.10,
        'eval_trials': 1000,
    },
    'features': {
        'label_transform': 'log_e',
        'lof_neighbors': 20,
        'lof_threshold': 1.5,
        'max_outlier_fraction': 0.20,
        'correlation_threshold': 0.80,
        'test_fraction': 0.30,
        'n_strata': 10,
    },
    'models': {
        'families': ['linear_ols', 'elasticnet', 'knn', 'decision_tree',
                     'random_forest', 'gradient_boosting'],
        'folds': 5,
        'seed': 42,
        'n_jobs': 1,
        'grids': {},
    },
    'runtime': {
        'bundle_path': 'adsala_bundle',
        'cache_size': 1,
        'tie_tolerance': 0.01,
    },
    'report': {
        'footprint_buckets_mb': [[0, 100], [100, 500]],
    },
}


def _deep_merge(base: Dict, override: Dict) -> Dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _positive_int_env(name: str, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a positive integer, got '{raw}'")
    if value < 1:
        raise ConfigError(f"{name} must be a positive integer, got '{raw}'")
    return value


def apply_env_overrides(config: Dict, environ: Optional[Dict] = None) -> Dict:
    """Apply ADSALA_* environment variables on top of a loaded config."""
    env = os.environ if environ is None else environ
    config = copy.deepcopy(config)

    affinity = env.get('ADSALA_AFFINITY')
    if affinity:
        affinity = affinity.strip().lower()
        if affinity not in AFFINITY_POLICIES:
            raise ConfigError(
                f"ADSALA_AFFINITY must be one of {', '.join(AFFINITY_POLICIES)}, got '{affinity}'"
            )
        config['backend']['affinity'] = affinity

    for block in ('MC', 'KC', 'NC'):
        name = f"ADSALA_BLOCK_{block}"
        if env.get(name):
            config['backend'][f"block_{block.lower()}"] = _positive_int_env(name, env[name])

    if env.get('ADSALA_BUNDLE'):
        config['runtime']['bundle_path'] = env['ADSALA_BUNDLE']

    return config


def validate_config(config: Dict) -> Dict:
    """Check the handful of values that would otherwise fail deep inside a run."""
    backend = config['backend']
    if backend.get('affinity') not in AFFINITY_POLICIES:
        raise ConfigError(f"backend.affinity must be one of {', '.join(AFFINITY_POLICIES)}")
    alignment = int(backend.get('alignment', 64))
    if alignment < 1 or alignment & (alignment - 1):
        raise ConfigError(f"backend.alignment must be a power of two, got {alignment}")

    sampler = config['sampler']
    if sampler.get('precision') not in ('single', 'double'):
        raise ConfigError("sampler.precision must be 'single' or 'double'")
    if sampler.get('mapping') not in ('square', 'linear'):
        raise ConfigError("sampler.mapping must be 'square' or 'linear'")

    harness = config['harness']
    if harness.get('statistic') not in ('median', 'mean'):
        raise ConfigError("harness.statistic must be 'median' or 'mean'")
    if harness.get('isolation') not in ('subprocess', 'in_process'):
        raise ConfigError("harness.isolation must be 'subprocess' or 'in_process'")

    if config['features'].get('label_transform') not in ('log_e', 'identity'):
        raise ConfigError("features.label_transform must be 'log_e' or 'identity'")
    return config


def load_config(config_path: Optional[Path] = None, environ: Optional[Dict] = None) -> Dict:
    """
    Load ADSALA configuration from YAML, merged over built-in defaults.

    Args:
        config_path: YAML file; the default path is optional, an explicit one must exist
        environ: Environment mapping for overrides (defaults to os.environ)

    Returns:
        Configuration dictionary with every section present
    """
    explicit = config_path is not None
    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH
    config_path = Path(config_path)

    loaded: Dict = {}
    if config_path.exists():
        try:
            with open(config_path, 'r') as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Failed to parse configuration file {config_path}: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"Invalid configuration file format: {config_path}")
    elif explicit:
        raise ConfigError(f"Configuration file not found: {config_path}")

    config = _deep_merge(DEFAULT_CONFIG, loaded)
    return validate_config(apply_env_overrides(config, environ))
