"""Streaming multi-way equi-join engine on an LSM-tree state backend.

The package provides:

- ``lsmjoin.lsm``: a per-stream persistent multimap (memtables, leveled
  run files, block cache) used as join state.
- ``lsmjoin.engine`` / ``lsmjoin.pipeline``: the multi-way join operator
  (insert-then-probe with short-circuit), a binary-join-tree baseline on
  the same backend, a capped in-memory baseline, and the run driver.
- ``lsmjoin.plan`` / ``lsmjoin.rewrite``: the logical-plan model and the
  two-step pass that collapses binary join trees into multi-way join nodes.
- ``lsmjoin.oracle``: brute-force batch joins, increment expectations and
  a batch plan interpreter used to verify everything else.
- ``lsmjoin.cli``: the ``lsmjoin`` command (gen/sql/convert/run/oracle/sweep).
"""

from .lsm import BackendConfig, BackendCounters, LsmBackend

__version__ = "0.1.0"

__all__ = ["BackendConfig", "BackendCounters", "LsmBackend", "__version__"]
