"""Dynamic ordered sets over word-sized keys with worst-case exponential search trees."""

from .core import (Config, ConfigError, ContractError, DomainError, Element, LevelTable,
                   OrderedSet, AuditReport, level_capacity, new, orderable_bits)
from .finger import Finger, finger_search, ladder_build, ladder_query

__all__ = [
    "Config", "ConfigError", "ContractError", "DomainError", "Element", "LevelTable",
    "OrderedSet", "AuditReport", "level_capacity", "new", "orderable_bits",
    "Finger", "finger_search", "ladder_build", "ladder_query",
]
__version__ = "0.1.0"
