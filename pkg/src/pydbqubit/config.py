import logging
import os


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.environ.get(name)
    if value is None:
        return default
    return value.lower() in {"1", "true", "yes", "on"}


def _env_log_level(name: str, default: int = logging.WARNING) -> int:
    value = os.environ.get(name)
    if not value:
        return default
    if value.isdigit():
        return int(value)
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else default


LOG_LEVEL = _env_log_level("PYDBQUBIT_LOG_LEVEL")
NO_PROGRESS = _env_flag("PYDBQUBIT_NO_PROGRESS")
