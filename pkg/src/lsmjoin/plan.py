"""Logical-plan DAG: typed nodes, JSON parse/serialize, BFS ordering.

Node kinds and arity: scan (0 inputs), hash and project (1), join (2),
multijoin (>= 2). The structure is a rooted, connected DAG; a node may
feed several consumers (shared subplan). `join_keys` is a flat list of
(input_ordinal, field) endpoints where consecutive entries pair up into
one equality condition.

hash nodes mark key redistribution boundaries and have no execution
effect here; they matter only to the pattern matcher.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .errors import PlanError

KINDS = ("scan", "hash", "join", "project", "multijoin")


@dataclass(eq=False)
class PlanNode:
    id: str
    kind: str
    inputs: list[PlanNode] = field(default_factory=list)
    table: str | None = None
    join_keys: list[tuple[int, str]] | None = None
    columns: list[str] | None = None
    group: object | None = None  # transient rewrite annotation


def _check_arity(node: PlanNode, n_inputs: int) -> None:
    kind = node.kind
    if kind == "scan" and n_inputs != 0:
        raise PlanError(f"node {node.id}: scan takes no inputs")
    if kind in ("hash", "project") and n_inputs != 1:
        raise PlanError(f"node {node.id}: {kind} takes exactly one input")
    if kind == "join" and n_inputs != 2:
        raise PlanError(f"node {node.id}: join takes exactly two inputs")
    if kind == "multijoin" and n_inputs < 2:
        raise PlanError(f"node {node.id}: multijoin takes at least two inputs")


def validate_plan(root: PlanNode) -> None:
    """Check arity, join_keys shape, acyclicity and connectivity."""
    seen: dict[int, PlanNode] = {}
    on_stack: set[str] = set()

    def visit(node: PlanNode) -> None:
        if id(node) in seen:
            return
        if node.id in on_stack:
            raise PlanError(f"cycle through node {node.id}")
        _check_arity(node, len(node.inputs))
        if node.kind == "scan" and not node.table:
            raise PlanError(f"node {node.id}: scan requires a table")
        if node.kind == "project" and not node.columns:
            raise PlanError(f"node {node.id}: project requires columns")
        if node.join_keys is not None:
            if len(node.join_keys) % 2:
                raise PlanError(f"node {node.id}: join_keys endpoints must pair up")
            for ordinal, fname in node.join_keys:
                if not 0 <= ordinal < len(node.inputs):
                    raise PlanError(
                        f"node {node.id}: join_keys ordinal {ordinal} out of range"
                    )
                if not fname:
                    raise PlanError(f"node {node.id}: empty join_keys field")
        on_stack.add(node.id)
        for child in node.inputs:
            visit(child)
        on_stack.discard(node.id)
        seen[id(node)] = node

    visit(root)
    ids = [n.id for n in seen.values()]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise PlanError(f"duplicate node ids: {dupes}")


def parse_plan(text: str) -> PlanNode:
    """Parse the JSON plan format and return the validated root node."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "root" not in doc or "nodes" not in doc:
        raise PlanError("plan must be an object with 'root' and 'nodes'")
    specs: dict[str, dict] = {}
    for raw in doc["nodes"]:
        nid = raw.get("id")
        if not nid or not isinstance(nid, str):
            raise PlanError("every node needs a string id")
        if nid in specs:
            raise PlanError(f"duplicate node id {nid}")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise PlanError(f"node {nid}: unknown kind {kind!r}")
        specs[nid] = raw

    nodes: dict[str, PlanNode] = {
        nid: PlanNode(
            id=nid,
            kind=raw["kind"],
            table=raw.get("table"),
            join_keys=[(int(o), str(f)) for o, f in raw["join_keys"]]
            if raw.get("join_keys") is not None
            else None,
            columns=list(raw["columns"]) if raw.get("columns") is not None else None,
        )
        for nid, raw in specs.items()
    }
    for nid, raw in specs.items():
        inputs = []
        for ref in raw.get("inputs", []):
            if ref not in nodes:
                raise PlanError(f"node {nid}: dangling input id {ref!r}")
            inputs.append(nodes[ref])
        nodes[nid].inputs = inputs

    root_id = doc["root"]
    if root_id not in nodes:
        raise PlanError(f"root id {root_id!r} not among nodes")
    root = nodes[root_id]

    consumers = {nid: 0 for nid in nodes}
    for node in nodes.values():
        for child in node.inputs:
            consumers[child.id] += 1
    if consumers[root_id]:
        raise PlanError(f"root {root_id} is consumed by another node")

    # cycle detection over the declared graph (before reachability pruning)
    state: dict[str, int] = {}

    def dfs(nid: str, path: list[str]) -> None:
        state[nid] = 1
        for child in nodes[nid].inputs:
            if state.get(child.id) == 1:
                raise PlanError(f"cycle: back edge {nid} -> {child.id}")
            if child.id not in state:
                dfs(child.id, path)
        state[nid] = 2

    for nid in nodes:
        if nid not in state:
            dfs(nid, [])

    reachable = {n.id for n in get_ordered_nodes(root)}
    unreachable = sorted(set(nodes) - reachable)
    if unreachable:
        raise PlanError(f"nodes not reachable from root: {unreachable}")
    validate_plan(root)
    return root


def get_ordered_nodes(root: PlanNode) -> list[PlanNode]:
    """Breadth-first order from the root; each node once, first discovery wins."""
    order: list[PlanNode] = []
    seen: set[str] = set()
    queue: deque[PlanNode] = deque([root])
    seen.add(root.id)
    while queue:
        node = queue.popleft()
        order.append(node)
        for child in node.inputs:
            if child.id not in seen:
                seen.add(child.id)
                queue.append(child)
    return order


def compute_outputs(root: PlanNode) -> dict[str, list[PlanNode]]:
    """Derived consumer lists: outputs[n] = nodes listing n among inputs."""
    outputs: dict[str, list[PlanNode]] = {n.id: [] for n in get_ordered_nodes(root)}
    for node in get_ordered_nodes(root):
        for child in node.inputs:
            outputs[child.id].append(node)
    return outputs


def serialize_plan(root: PlanNode) -> str:
    """Stable JSON text; parse_plan(serialize_plan(p)) is isomorphic to p."""
    nodes = []
    for node in get_ordered_nodes(root):
        raw: dict = {"id": node.id, "kind": node.kind}
        if node.table is not None:
            raw["table"] = node.table
        if node.join_keys is not None:
            raw["join_keys"] = [[o, f] for o, f in node.join_keys]
        if node.columns is not None:
            raw["columns"] = list(node.columns)
        raw["inputs"] = [c.id for c in node.inputs]
        nodes.append(raw)
    return json.dumps({"root": root.id, "nodes": nodes}, indent=2)


def clone_plan(root: PlanNode) -> PlanNode:
    """Deep-copy the reachable graph, preserving ids and sharing structure."""
    copies: dict[str, PlanNode] = {}

    def copy(node: PlanNode) -> PlanNode:
        if node.id in copies:
            return copies[node.id]
        c = PlanNode(
            id=node.id,
            kind=node.kind,
            table=node.table,
            join_keys=list(node.join_keys) if node.join_keys is not None else None,
            columns=list(node.columns) if node.columns is not None else None,
        )
        copies[node.id] = c
        c.inputs = [copy(i) for i in node.inputs]
        return c

    return copy(root)


def plans_isomorphic(a: PlanNode, b: PlanNode) -> bool:
    """Structural equality over the reachable graphs (ids included)."""
    seen: set[tuple[str, str]] = set()

    def eq(x: PlanNode, y: PlanNode) -> bool:
        if (x.id, y.id) in seen:
            return True
        if (
            x.id != y.id
            or x.kind != y.kind
            or x.table != y.table
            or (x.join_keys or None) != (y.join_keys or None)
            or (x.columns or None) != (y.columns or None)
            or len(x.inputs) != len(y.inputs)
        ):
            return False
        seen.add((x.id, y.id))
        return all(eq(xc, yc) for xc, yc in zip(x.inputs, y.inputs))

    return eq(a, b)
