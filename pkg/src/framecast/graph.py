"""Alias graphs and their transfer operations.

An alias graph is a rooted, labeled digraph: nodes stand for possible
objects, edges for reference variables and attributes, and the root for the
current object.  Multiple edges with one label out of a node carry
may-information.  Qualified-call analysis temporarily re-roots the graph and
records a primed back-reference edge to the caller.

Graphs are values: every operation returns a new graph.  Paths are handled
as label tuples; the empty tuple denotes the root (Current).
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ._paths import enumerate_simple_paths
from .errors import AnalysisError
from .lang.ast import PRIME, LabelPath, is_primed_label, path_text

Path = LabelPath
PathSet = frozenset[Path]

CURRENT_PATH: Path = ()


class NodeAlloc:
    """Monotone node-id allocator; one per analysis, so graphs that evolved
    from a common ancestor never collide and joins stay well defined."""

    def __init__(self, start: int = 0) -> None:
        self._next = start

    def fresh(self) -> int:
        node = self._next
        self._next += 1
        return node

    @staticmethod
    def above(graph: "AliasGraph") -> "NodeAlloc":
        return NodeAlloc(max(graph.nodes) + 1 if graph.nodes else 0)


@dataclass(frozen=True)
class AliasGraph:
    nodes: frozenset[int]
    edges: frozenset[tuple[int, str, int]]
    root: int
    #: (saved root, back-edge label, call root) per open qualified call.
    context_stack: tuple[tuple[int, str, int], ...] = ()
    _enc: Optional[tuple] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.root not in self.nodes:
            raise AnalysisError(f"root {self.root} not in node set")
        for src, _, dst in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise AnalysisError(f"edge endpoint outside node set: {(src, dst)}")

    @staticmethod
    def build(
        edges: Iterable[tuple[int, str, int]],
        root: int = 0,
        nodes: Optional[Iterable[int]] = None,
    ) -> "AliasGraph":
        edge_set = frozenset(edges)
        node_set = {root} | {n for e in edge_set for n in (e[0], e[2])}
        if nodes is not None:
            node_set |= set(nodes)
        return AliasGraph(frozenset(node_set), edge_set, root)

    # -- encoded adjacency (cached per value) -------------------------------

    def _encoding(self):
        enc = self._enc
        if enc is None:
            node_list = sorted(self.nodes)
            node_index = {n: i for i, n in enumerate(node_list)}
            label_list = sorted({lab for _, lab, _ in self.edges})
            label_index = {lab: i for i, lab in enumerate(label_list)}
            out: list[list[tuple[int, int]]] = [[] for _ in node_list]
            for src, lab, dst in self.edges:
                out[node_index[src]].append((label_index[lab], node_index[dst]))
            indptr = array("i", [0])
            labels = array("i")
            dsts = array("i")
            for row in out:
                row.sort()
                for lab_id, dst_i in row:
                    labels.append(lab_id)
                    dsts.append(dst_i)
                indptr.append(len(labels))
            enc = (node_list, node_index, label_list, label_index, indptr, labels, dsts)
            object.__setattr__(self, "_enc", enc)
        return enc

    def targets(self, src: int, label: str) -> frozenset[int]:
        return frozenset(d for s, lab, d in self.edges if s == src and lab == label)

    def denote(self, labels: Path, start: Optional[int] = None) -> frozenset[int]:
        """Set of nodes a label path may reach from the root (or `start`)."""
        frontier = {self.root if start is None else start}
        for lab in labels:
            frontier = {d for s, l, d in self.edges if l == lab and s in frontier}
            if not frontier:
                return frozenset()
        return frozenset(frontier)

    def _enumerate(self, starts: frozenset[int], targets: Optional[frozenset[int]], max_len: int) -> set[Path]:
        node_list, node_index, label_list, _, indptr, labels, dsts = self._encoding()
        if not starts:
            return set()
        start_arr = array("i", sorted(node_index[n] for n in starts))
        mask = None
        if targets is not None:
            mask = array("b", bytes(len(node_list)))
            for n in targets:
                mask[node_index[n]] = 1
        raw = enumerate_simple_paths(indptr, labels, dsts, start_arr, mask, max_len)
        return {tuple(label_list[i] for i in ids) for ids in raw}


# ---------------------------------------------------------------------------
# queries


def alias_of(graph: AliasGraph, path: Path) -> PathSet:
    """Every root path reaching a node that `path` may reach, plus the path
    itself; contains Current (the empty path) when `path` denotes the root.
    Untraversable paths alias only themselves."""
    out: set[Path] = {path}
    nodes = graph.denote(path)
    if not nodes:
        return frozenset(out)
    out |= graph._enumerate(frozenset({graph.root}), nodes, 0)
    if graph.root in nodes:
        out.add(CURRENT_PATH)
    return frozenset(out)


def completion_paths(graph: AliasGraph, paths: Iterable[Path], cap: int = 0) -> PathSet:
    """Each path plus all of its simple-walk extensions through the graph.
    `cap` > 0 limits the number of extension labels per path."""
    out: set[Path] = set(paths)
    for p in list(out):
        nodes = graph.denote(p)
        if not nodes:
            continue
        for ext in graph._enumerate(nodes, None, cap):
            out.add(p + ext)
    return frozenset(out)


def dot_distribute(prefix: Path, paths: Iterable[Path]) -> PathSet:
    """Prepend `prefix` to every path; a Current prefix is the identity."""
    return frozenset(prefix + p for p in paths)


def denotes_root(graph: AliasGraph, path: Path) -> bool:
    return graph.root in graph.denote(path)


def strip_primed(paths: Iterable[Path]) -> PathSet:
    return frozenset(p for p in paths if not any(is_primed_label(lab) for lab in p))


def truncate_paths(paths: Iterable[Path], depth: int) -> PathSet:
    return frozenset(p for p in paths if len(p) <= depth)


# ---------------------------------------------------------------------------
# transfers


def materialize(graph: AliasGraph, labels: Path, alloc: NodeAlloc) -> tuple[AliasGraph, frozenset[int]]:
    """Traverse `labels` from the root, inventing a fresh summary node per
    source node wherever an edge is missing.  Never fails."""
    edges = set(graph.edges)
    nodes = set(graph.nodes)
    frontier = {graph.root}
    changed = False
    for lab in labels:
        step: set[int] = set()
        for src in sorted(frontier):
            targets = {d for s, l, d in edges if s == src and l == lab}
            if not targets:
                fresh = alloc.fresh()
                nodes.add(fresh)
                edges.add((src, lab, fresh))
                targets = {fresh}
                changed = True
            step |= targets
        frontier = step
    if not changed:
        return graph, frozenset(frontier)
    out = AliasGraph(frozenset(nodes), frozenset(edges), graph.root, graph.context_stack)
    return out, frozenset(frontier)


def _retarget(
    graph: AliasGraph,
    sources: frozenset[int],
    label: str,
    new_targets: frozenset[int],
    weak: bool,
) -> AliasGraph:
    """Point `label` out of every source at `new_targets`.  The update is
    strong (old edges dropped) only for a unique source outside loop
    analysis; otherwise edges accumulate, preserving may-information."""
    edges = set(graph.edges)
    if not weak and len(sources) == 1:
        edges = {e for e in edges if not (e[0] in sources and e[1] == label)}
    edges |= {(src, label, dst) for src in sources for dst in new_targets}
    return AliasGraph(graph.nodes | new_targets, frozenset(edges), graph.root, graph.context_stack)


def apply_assign(
    graph: AliasGraph,
    target: Path,
    source: Path,
    alloc: NodeAlloc,
    weak: bool = False,
) -> AliasGraph:
    """Alias transfer of `target := source` for a path-valued source."""
    if not target:
        raise AnalysisError("assignment target must be a non-empty path")
    g, prefix_nodes = materialize(graph, target[:-1], alloc)
    g, source_nodes = materialize(g, source, alloc)
    return _retarget(g, prefix_nodes, target[-1], source_nodes, weak)


def apply_create(
    graph: AliasGraph,
    target: Path,
    alloc: NodeAlloc,
    weak: bool = False,
) -> AliasGraph:
    """Alias transfer of `create target`: a fresh node, re-pointing the
    target edge exactly as an assignment from a fresh singleton would."""
    if not target:
        raise AnalysisError("creation target must be a non-empty path")
    g, prefix_nodes = materialize(graph, target[:-1], alloc)
    fresh = alloc.fresh()
    g = AliasGraph(g.nodes | {fresh}, g.edges, g.root, g.context_stack)
    return _retarget(g, prefix_nodes, target[-1], frozenset({fresh}), weak)


def apply_fresh_target(
    graph: AliasGraph,
    target: Path,
    alloc: NodeAlloc,
    weak: bool = False,
) -> AliasGraph:
    """Re-point `target` at a fresh node (function-result abstraction)."""
    return apply_create(graph, target, alloc, weak)


def push_context(graph: AliasGraph, call_target: Path, node: int) -> AliasGraph:
    """Enter a qualified call on one node denoted by `call_target`: the node
    becomes the root and a primed back edge leads to the caller's root."""
    if node not in graph.nodes:
        raise AnalysisError(f"push target node {node} not in graph")
    primed = path_text(call_target) + PRIME
    edges = graph.edges | {(node, primed, graph.root)}
    stack = graph.context_stack + ((graph.root, primed, node),)
    return AliasGraph(graph.nodes, edges, node, stack)


def pop_context(graph: AliasGraph) -> tuple[AliasGraph, str]:
    """Leave the innermost qualified call: restore the caller root, drop the
    back edge, keep every edge the call created."""
    if not graph.context_stack:
        raise AnalysisError("pop_context on an empty context stack")
    saved_root, primed, call_root = graph.context_stack[-1]
    if graph.root != call_root:
        raise AnalysisError("pop_context root mismatch")
    edges = graph.edges - {(call_root, primed, saved_root)}
    return (
        AliasGraph(graph.nodes, frozenset(edges), saved_root, graph.context_stack[:-1]),
        primed,
    )


def join(g1: AliasGraph, g2: AliasGraph) -> AliasGraph:
    """May-union of two graphs that evolved from a common ancestor."""
    if g1.root != g2.root:
        raise AnalysisError("join requires a common root")
    if g1.context_stack != g2.context_stack:
        raise AnalysisError("join requires matching call contexts")
    return AliasGraph(g1.nodes | g2.nodes, g1.edges | g2.edges, g1.root, g1.context_stack)


# ---------------------------------------------------------------------------
# rendering


def to_dot(graph: AliasGraph, name: str = "aliasgraph") -> str:
    """DOT rendering: root double-circled, back edges dashed."""
    lines = [f"digraph {name} {{", "    rankdir=LR;"]
    for node in sorted(graph.nodes):
        shape = "doublecircle" if node == graph.root else "circle"
        lines.append(f'    n{node} [shape={shape} label="n{node}"];')
    for src, label, dst in sorted(graph.edges):
        style = ", style=dashed" if is_primed_label(label) else ""
        lines.append(f'    n{src} -> n{dst} [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_paths(paths: Iterable[Path]) -> str:
    return "{" + ", ".join(path_text(p) for p in sorted(paths)) + "}"
