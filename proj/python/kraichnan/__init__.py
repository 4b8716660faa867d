"""Kraichnan passive scalar toolkit (Python front end of the C++ library)."""

import json as _json

from ._kraichnan import *  # noqa: F401,F403
from ._kraichnan import __version__, validate_config as _validate_config


def resolve_config(config: dict) -> dict:
    """Validate a config dict and return it with defaults filled in."""
    return _json.loads(_validate_config(_json.dumps(config)))
