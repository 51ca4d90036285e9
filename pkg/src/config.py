"""
Configuration loading.

Defaults live here; config/slopeforge.yaml overrides them section by section
and command-line flags override both.
"""

import copy
import logging
import os
from typing import Any, Dict, Optional

import yaml

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config/slopeforge.yaml"

DEFAULT_CONFIG: Dict[str, Any] = {
    'precision': {
        'N': 8,
        'd': 1,
        'e': 1,
        'h': 0,
        'window': [-8, 8]
    },
    'algorithms': {
        'n_max': None,
        'max_iter': 40,
        'diag_max_iter': 40,
        'retry_h': True,
        'retry_unramified': True
    },
    'execution': {
        'workers': 1,
        'max_concurrent_instances': 2
    },
    'logging': {
        'level': 'WARNING',
        'format': '%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    }
}


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Load the YAML config merged over the defaults; fall back to the defaults on error."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    config_path = path or DEFAULT_CONFIG_PATH
    if not os.path.exists(config_path):
        if path:
            logger.error(f"Config file not found: {config_path}")
        return config
    try:
        with open(config_path, 'r') as f:
            loaded = yaml.safe_load(f) or {}
        for section, values in loaded.items():
            if isinstance(values, dict) and isinstance(config.get(section), dict):
                config[section] = {**config[section], **values}
            else:
                config[section] = values
    except Exception as e:
        logger.error(f"Error loading config: {e}")
        return copy.deepcopy(DEFAULT_CONFIG)
    return config
