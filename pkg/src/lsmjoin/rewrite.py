"""Two-step conversion of binary join trees into multi-way join nodes.

Step 1 walks the plan breadth-first and partitions the nodes that form a
binary-join-tree pattern into groups: a node joins the group shared by
all of its consumers, otherwise a join node starts a new group with
itself as root (and first member). Step 2 rewrites the plan bottom-up,
replacing each group root with a single multijoin node whose inputs are
the members' inputs that are not themselves members, deduplicated in
member order.

The member predicate is configurable: by default a node qualifies if it
is a join, or a hash directly over a join; with include_project_nodes it
also admits a project directly over a join, and the synthesized
multijoin then carries the root's output columns so the absorbed
projection still applies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PlanError
from .plan import PlanNode, clone_plan, compute_outputs, get_ordered_nodes, validate_plan


@dataclass
class PatternConfig:
    include_project_nodes: bool = False


@dataclass(eq=False)
class MultiJoinGroup:
    root: PlanNode
    members: list[PlanNode] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            self.members = [self.root]


def can_be_multi_join_group_member(node: PlanNode, config: PatternConfig | None = None) -> bool:
    """True for a join, a hash over a join, or (if configured) a project over a join."""
    config = config or PatternConfig()
    if node.kind == "join":
        return True
    if node.kind == "hash" and node.inputs and node.inputs[0].kind == "join":
        return True
    if (
        config.include_project_nodes
        and node.kind == "project"
        and node.inputs
        and node.inputs[0].kind == "join"
    ):
        return True
    return False


def can_be_in_same_group_with_outputs(
    node: PlanNode, outputs: dict[str, list[PlanNode]]
) -> MultiJoinGroup | None:
    """The group shared by all of the node's consumers, if there is one."""
    outs = outputs.get(node.id, [])
    if not outs:
        return None
    group = outs[0].group
    if group is None:
        return None
    for out in outs:
        if out.group is not group:
            return None
    return group


def create_multi_join_groups(root: PlanNode, config: PatternConfig | None = None) -> list[MultiJoinGroup]:
    """Assign group annotations over the plan; returns the groups created."""
    config = config or PatternConfig()
    ordered = get_ordered_nodes(root)
    for node in ordered:
        if node.group is not None:
            raise PlanError(f"node {node.id} already carries a group annotation")
    outputs = compute_outputs(root)
    groups: list[MultiJoinGroup] = []
    for node in ordered:
        if not can_be_multi_join_group_member(node, config):
            continue
        output_group = can_be_in_same_group_with_outputs(node, outputs)
        if output_group is not None:
            output_group.members.append(node)
            node.group = output_group
            continue
        if node.kind == "join":
            group = MultiJoinGroup(root=node)
            node.group = group
            groups.append(group)
    return groups


class _Rewriter:
    def __init__(self, root: PlanNode, config: PatternConfig):
        self.config = config
        self.visited: dict[str, PlanNode] = {}
        self.counter = 0
        self.multijoin_count = 0
        # column -> owning table, from declared scan schemas; used to anchor
        # equality endpoints that referenced an in-group intermediate node
        self.column_table: dict[str, str | None] = {}
        for node in get_ordered_nodes(root):
            if node.kind == "scan" and node.columns:
                for col in node.columns:
                    if col in self.column_table:
                        self.column_table[col] = None  # ambiguous
                    else:
                        self.column_table[col] = node.table

    def rewrite(self, node: PlanNode) -> PlanNode:
        if node.id in self.visited:
            return self.visited[node.id]
        node.inputs = [self.rewrite(child) for child in node.inputs]
        ret = node
        if node.group is not None and node.group.root is node:
            ret = self.build_multijoin(node.group)
            self.multijoin_count += 1
        self.visited[node.id] = ret
        return ret

    def build_multijoin(self, group: MultiJoinGroup) -> PlanNode:
        member_ids = {m.id for m in group.members}
        ext_inputs: list[PlanNode] = []
        ext_index: dict[str, int] = {}
        for member in group.members:
            for child in member.inputs:
                if child.id in member_ids or child.id in ext_index:
                    continue
                ext_index[child.id] = len(ext_inputs)
                ext_inputs.append(child)
        join_keys: list[tuple[int, str]] = []
        for member in group.members:
            if member.kind != "join" or not member.join_keys:
                continue
            for pos in range(0, len(member.join_keys), 2):
                for ordinal, fname in member.join_keys[pos : pos + 2]:
                    join_keys.append(
                        self._anchor(member, ordinal, fname, member_ids, ext_inputs, ext_index)
                    )
        node = PlanNode(
            id=f"multijoin-{self.counter}",
            kind="multijoin",
            inputs=ext_inputs,
            join_keys=join_keys,
        )
        self.counter += 1
        if self.config.include_project_nodes and any(
            m.kind == "project" for m in group.members
        ):
            node.columns = self._root_columns(group)
        return node

    def _anchor(
        self,
        member: PlanNode,
        ordinal: int,
        fname: str,
        member_ids: set[str],
        ext_inputs: list[PlanNode],
        ext_index: dict[str, int],
    ) -> tuple[int, str]:
        target = member.inputs[ordinal]
        if target.id not in member_ids:
            return ext_index[target.id], fname
        # the endpoint named a column flowing out of an in-group node; anchor
        # it to the external input whose subtree owns that column
        table = self.column_table.get(fname)
        if table is None:
            raise PlanError(
                f"cannot anchor column {fname!r} for {member.id}: declare it on a scan"
            )
        for idx, ext in enumerate(ext_inputs):
            if table in self._tables_under(ext):
                return idx, fname
        raise PlanError(
            f"cannot anchor column {fname!r} of {member.id}: table {table!r} "
            "not under any aggregated input"
        )

    @staticmethod
    def _tables_under(node: PlanNode) -> set[str]:
        tables: set[str] = set()
        for n in get_ordered_nodes(node):
            if n.kind == "scan" and n.table:
                tables.add(n.table)
        return tables

    def _root_columns(self, group: MultiJoinGroup) -> list[str]:
        """Output columns of the group root in the original tree, so an
        absorbed projection keeps restricting the synthesized node."""

        def columns_of(node: PlanNode) -> list[str]:
            if node.kind == "scan":
                if not node.columns:
                    raise PlanError(
                        f"scan {node.id} needs declared columns to absorb a projection"
                    )
                return list(node.columns)
            if node.kind in ("hash",):
                return columns_of(node.inputs[0])
            if node.kind == "project":
                return list(node.columns or [])
            if node.kind in ("join", "multijoin"):
                if node.kind == "multijoin" and node.columns:
                    return list(node.columns)
                out: list[str] = []
                for child in node.inputs:
                    out.extend(columns_of(child))
                return out
            raise PlanError(f"cannot derive columns of {node.id} ({node.kind})")

        return columns_of(group.root)


def two_step_convert(root: PlanNode, config: PatternConfig | None = None) -> PlanNode:
    """Recognize binary-join-tree groups, then replace each with a multijoin.

    Returns a new plan; the input plan is left untouched. Plans without
    join nodes come back structurally identical.
    """
    config = config or PatternConfig()
    working = clone_plan(root)
    create_multi_join_groups(working, config)
    rewriter = _Rewriter(working, config)
    new_root = rewriter.rewrite(working)
    validate_plan(new_root)
    return new_root


def convert_with_stats(root: PlanNode, config: PatternConfig | None = None):
    """two_step_convert plus (groups, multijoins) counts for CLI reporting."""
    config = config or PatternConfig()
    working = clone_plan(root)
    groups = create_multi_join_groups(working, config)
    rewriter = _Rewriter(working, config)
    new_root = rewriter.rewrite(working)
    validate_plan(new_root)
    return new_root, len(groups), rewriter.multijoin_count
