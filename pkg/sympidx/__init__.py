"""Mean, Conley–Zehnder and coisotropic Maslov indices of symplectic paths."""

import logging
import sys

__version__ = '1.0.0'


def configure_logging(level: str = None) -> None:
    """Send diagnostics to standard error; standard output stays JSON-only."""
    from sympidx.config import get_config

    level = (level or get_config('log_level', 'INFO')).upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.INFO),
        format='%(levelname)s %(name)s: %(message)s',
        force=True,
    )
