"""Brute-force ground truth for join results.

Everything here is deliberately simple and slow: nested loops over value
rows, no index structures beyond per-key selection, no shared code with
the engine's probe path. Results are multisets (collections.Counter) so
comparisons are order-insensitive and multiplicity-sensitive.
"""

from __future__ import annotations

from collections import Counter
from itertools import product

from .errors import InterpretError, PlanError
from .plan import PlanNode

Row = tuple  # per-stream value tuple
ResultMultiset = Counter  # joined row -> multiplicity


def _key_of(row: Row, positions: tuple[int, ...]):
    return tuple(row[p] for p in positions)


def batch_multi_join(contents: list[list[Row]], key_spec: list[tuple[int, ...]]) -> ResultMultiset:
    """Full nested-loop equi-join of n streams.

    `contents` holds one list of value tuples per stream; `key_spec` gives
    the key field positions per stream. Each output row is the tuple of
    per-stream input rows. Desk scale only: per distinct key of the first
    stream, matching rows are found by scanning every stream front to back.
    """
    if len(contents) < 2:
        raise ValueError("need at least two streams")
    result: ResultMultiset = Counter()
    seen: set = set()
    for first in contents[0]:
        key = _key_of(first, key_spec[0])
        if key in seen:
            continue
        seen.add(key)
        groups: list[list[Row]] = []
        empty = False
        for rows, positions in zip(contents, key_spec):
            matching = [r for r in rows if _key_of(r, positions) == key]
            if not matching:
                empty = True
                break
            groups.append(matching)
        if empty:
            continue
        for combo in product(*groups):
            result[combo] += 1
    return result


def expected_increment(
    contents: list[list[Row]],
    increment: list[Row],
    position: int,
    key_spec: list[tuple[int, ...]],
) -> ResultMultiset:
    """Join result contributed by one batch arriving on stream `position`.

    `contents` holds the per-stream snapshots to join against: streams that
    received their batch earlier appear updated, later streams at their
    prior state. `contents[position]` is ignored and replaced by
    `increment`. The returned multiset is empty when the increment is.
    """
    if not increment:
        return Counter()
    snapshot = list(contents)
    snapshot[position] = increment
    result: ResultMultiset = Counter()
    seen: set = set()
    for inc_row in increment:
        key = _key_of(inc_row, key_spec[position])
        if key in seen:
            continue
        seen.add(key)
        groups: list[list[Row]] = []
        empty = False
        for rows, positions in zip(snapshot, key_spec):
            matching = [r for r in rows if _key_of(r, positions) == key]
            if not matching:
                empty = True
                break
            groups.append(matching)
        if empty:
            continue
        for combo in product(*groups):
            result[combo] += 1
    return result


def multiset_sum(parts) -> ResultMultiset:
    total: ResultMultiset = Counter()
    for part in parts:
        total.update(part)
    return total


def multiset_diff(a: ResultMultiset, b: ResultMultiset) -> ResultMultiset:
    """Multiset difference a - b; raises if b is not contained in a."""
    out = Counter(a)
    for row, count in b.items():
        out[row] -= count
        if out[row] < 0:
            raise ValueError("difference would be negative")
        if out[row] == 0:
            del out[row]
    return out


# -- batch plan interpretation ------------------------------------------------

DictRow = dict


def _conditions(node: PlanNode) -> list[tuple[tuple[int, str], tuple[int, str]]]:
    pairs = node.join_keys or []
    if len(pairs) % 2:
        raise PlanError(f"node {node.id}: join_keys must pair up endpoints")
    return [
        ((pairs[i][0], pairs[i][1]), (pairs[i + 1][0], pairs[i + 1][1]))
        for i in range(0, len(pairs), 2)
    ]


def interpret_plan(root: PlanNode, tables: dict[str, list[DictRow]]):
    """Bottom-up batch evaluation of a logical plan over named tables.

    hash nodes are pass-through; project selects columns preserving
    multiplicity; join/multijoin is a nested-loop equi-join folding inputs
    left to right, applying each equality as soon as both columns exist.
    Returns (rows, columns): the list of dict rows and the output column
    order.
    """
    memo: dict[str, tuple[list[DictRow], list[str]]] = {}

    def eval_node(node: PlanNode) -> tuple[list[DictRow], list[str]]:
        if node.id in memo:
            return memo[node.id]
        if node.kind == "scan":
            if node.table not in tables:
                raise InterpretError(f"scan {node.id}: unknown table {node.table!r}")
            rows = [dict(r) for r in tables[node.table]]
            columns = list(rows[0].keys()) if rows else list(node.columns or [])
        elif node.kind == "hash":
            rows, columns = eval_node(node.inputs[0])
        elif node.kind == "project":
            in_rows, in_cols = eval_node(node.inputs[0])
            for c in node.columns or []:
                if c not in in_cols:
                    raise InterpretError(f"project {node.id}: unknown column {c!r}")
            columns = list(node.columns or [])
            rows = [{c: r[c] for c in columns} for r in in_rows]
        elif node.kind in ("join", "multijoin"):
            rows, columns = _eval_join(node)
            if node.kind == "multijoin" and node.columns:
                for c in node.columns:
                    if c not in columns:
                        raise InterpretError(f"{node.id}: unknown column {c!r}")
                rows = [{c: r[c] for c in node.columns} for r in rows]
                columns = list(node.columns)
        else:
            raise InterpretError(f"cannot interpret node kind {node.kind!r}")
        memo[node.id] = (rows, columns)
        return memo[node.id]

    def _eval_join(node: PlanNode) -> tuple[list[DictRow], list[str]]:
        inputs = [eval_node(i) for i in node.inputs]
        conditions = _conditions(node)
        # fold inputs left to right, applying a condition once both of its
        # referenced inputs have been folded in
        acc_rows, acc_cols = inputs[0]
        acc_rows = [dict(r) for r in acc_rows]
        for i in range(1, len(inputs)):
            nxt_rows, nxt_cols = inputs[i]
            overlap = set(acc_cols) & set(nxt_cols)
            if overlap:
                raise InterpretError(
                    f"{node.id}: duplicate columns across join inputs: {sorted(overlap)}"
                )
            ready = [
                c
                for c in conditions
                if max(c[0][0], c[1][0]) == i and min(c[0][0], c[1][0]) < i
            ]
            merged = []
            for a in acc_rows:
                for b in nxt_rows:
                    ok = True
                    for (la, fa), (lb, fb) in ready:
                        row_a = a if la < i else b
                        row_b = a if lb < i else b
                        if fa not in row_a or fb not in row_b:
                            raise InterpretError(
                                f"{node.id}: unknown column in condition "
                                f"({fa!r}, {fb!r})"
                            )
                        if row_a[fa] != row_b[fb]:
                            ok = False
                            break
                    if ok:
                        m = dict(a)
                        m.update(b)
                        merged.append(m)
            acc_rows = merged
            acc_cols = acc_cols + list(nxt_cols)
        # conditions confined to a single input ordinal are malformed
        for (la, _), (lb, _) in conditions:
            if la == lb:
                raise InterpretError(f"{node.id}: condition references a single input")
        return acc_rows, acc_cols

    return eval_node(root)


def rows_multiset(rows: list[DictRow]) -> ResultMultiset:
    """Canonical multiset over dict rows (order-insensitive, exact)."""
    return Counter(tuple(sorted(r.items())) for r in rows)
