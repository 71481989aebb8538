"""LSM-tree multimap state backend: memtables, run files, block cache."""

from .backend import BackendConfig, BackendCounters, LsmBackend
from .bloom import BloomFilter
from .cache import BlockCache
from .memtable import MemTable

__all__ = [
    "BackendConfig",
    "BackendCounters",
    "BlockCache",
    "BloomFilter",
    "LsmBackend",
    "MemTable",
]
