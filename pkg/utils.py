"""
Utility Functions

This module contains helper functions for file operations, timestamps and
other utility functions used throughout the Mixed Operator Lab.
"""

import json
import logging
import os
from datetime import datetime
from typing import Any, Dict

import pytz

from config import CSV_TIMESTAMP_FORMAT, OUTPUT_TIMEZONE
from errors import ConfigError

logger = logging.getLogger(__name__)


def get_script_directory() -> str:
    """Get the directory where the current script is located."""
    return os.path.dirname(os.path.abspath(__file__))


def resolve_path(path: str) -> str:
    """Resolve a path relative to the script directory unless it is absolute or exists as given."""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(get_script_directory(), path)


def load_json_file(path: str) -> Dict[str, Any]:
    """
    Load a JSON object from a file.

    Args:
        path: File path, absolute or relative to the script directory

    Returns:
        Parsed top-level object

    Raises:
        ConfigError: If the file cannot be read, is not JSON, or is not an object
    """
    file_path = resolve_path(path)
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (FileNotFoundError, PermissionError, OSError) as e:
        raise ConfigError(f"Error loading file {path}: {str(e)}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {str(e)}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must hold a JSON object")
    return data


def ensure_directory(path: str) -> str:
    """Create a directory if it doesn't exist and check that it is writable."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Error creating output directory {path}: {str(e)}") from e
    if not os.access(path, os.W_OK):
        raise ConfigError(f"Output directory {path} is not writable")
    return path


def check_writable(path: str) -> str:
    """
    Check that a directory exists and is writable, or could be created, without creating it.

    Raises:
        ConfigError: If path names a non-directory or its nearest existing ancestor is not writable
    """
    if os.path.exists(path) and not os.path.isdir(path):
        raise ConfigError(f"Output path {path} exists and is not a directory")
    existing = os.path.abspath(path)
    while not os.path.exists(existing):
        existing = os.path.dirname(existing)
    if not os.path.isdir(existing):
        raise ConfigError(f"Output directory {path} cannot be created under {existing}")
    if not os.access(existing, os.W_OK | os.X_OK):
        raise ConfigError(f"Output directory {path} is not writable")
    return path


def save_text_file(path: str, content: str) -> bool:
    """Write text content to a file, returning False on failure."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        return True
    except OSError as e:
        logger.error(f"Error writing {path}: {str(e)}")
        return False


def utc_timestamp() -> str:
    """Current time as an ISO-8601 UTC string."""
    return datetime.now(pytz.timezone(OUTPUT_TIMEZONE)).strftime(CSV_TIMESTAMP_FORMAT)
