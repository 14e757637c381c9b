"""Undirected graph on interaction masks with edges from the block inverse.

Center nodes come first, then the wings; an edge joins two distinct nodes
whenever the matching entry of the block inverse clears the tolerance.
Separation of the wings by the center is the graphical face of the CI
verdict.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .bitgroup import IndexSets, Mask, Partition
from .schur import OmegaMatrix

__all__ = [
    "GraphNode",
    "BeginGraph",
    "build_graph",
    "separates",
    "export_graph",
    "graph_from_json",
]


@dataclass(frozen=True)
class GraphNode:
    """One vertex: its mask, wing membership, and a human-readable name."""

    mask: Mask
    wing: str
    label: str

    def __post_init__(self) -> None:
        if self.wing not in ("B", "L", "R"):
            raise ValueError(f"wing must be B, L, or R, got {self.wing!r}")


@dataclass(frozen=True)
class BeginGraph:
    """Thresholded adjacency of the block inverse, wing-annotated."""

    nodes: Tuple[GraphNode, ...]
    edges: Tuple[Tuple[int, int, float], ...]
    tol: float

    def __post_init__(self) -> None:
        n = len(self.nodes)
        for i, j, w in self.edges:
            if not (0 <= i < j < n):
                raise ValueError(f"bad edge ({i},{j}) for {n} nodes")
            if abs(w) <= self.tol:
                raise ValueError(f"edge ({i},{j}) weight {w} inside tolerance")

    def neighbors(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in self.nodes]
        for i, j, _ in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


def _coordinate_names(part: Optional[Partition], width: int) -> Dict[int, str]:
    """Per-coordinate display names; block-aware when the generators are
    disjoint single coordinates, plain X-names otherwise."""
    names = {j: f"X{j}" for j in range(1, width + 1)}
    if part is None:
        return names
    assigned: Dict[int, str] = {}
    for prefix, gens in (("A", part.a_gens), ("B", part.b_gens), ("C", part.c_gens)):
        for i, g in enumerate(gens):
            cs = g.coords()
            if len(cs) != 1 or cs[0] in assigned:
                return names
            assigned[cs[0]] = f"{prefix}{i + 1}"
    names.update(assigned)
    return names


def _mask_label(mask: Mask, names: Dict[int, str]) -> str:
    if mask.is_identity:
        return "1"
    return "*".join(names[j] for j in mask.coords())


def build_graph(omega: OmegaMatrix, labels: IndexSets, tol: float) -> BeginGraph:
    """Threshold the block inverse into an undirected wing-labeled graph."""
    counts = (len(labels.b_set), len(labels.l_set), len(labels.r_set))
    n = sum(counts)
    if omega.omega.shape != (n, n):
        raise ValueError(
            f"omega shape {omega.omega.shape} does not match {n} labeled masks"
        )
    names = _coordinate_names(labels.part, labels.width)
    nodes: List[GraphNode] = []
    for wing, masks in zip("BLR", (labels.b_set, labels.l_set, labels.r_set)):
        for mk in masks:
            nodes.append(GraphNode(mask=mk, wing=wing, label=_mask_label(mk, names)))
    edges: List[Tuple[int, int, float]] = []
    mat = omega.omega
    for i in range(n):
        for j in range(i + 1, n):
            w = float(mat[i, j])
            if abs(w) > tol:
                edges.append((i, j, w))
    return BeginGraph(nodes=tuple(nodes), edges=tuple(edges), tol=tol)


def separates(g: BeginGraph) -> bool:
    """True iff removing the center nodes disconnects left wing from right."""
    adj = g.neighbors()
    blocked = [node.wing == "B" for node in g.nodes]
    seen = [False] * len(g.nodes)
    queue = deque(
        i for i, node in enumerate(g.nodes) if node.wing == "L"
    )
    for i in queue:
        seen[i] = True
    while queue:
        i = queue.popleft()
        for j in adj[i]:
            if blocked[j] or seen[j]:
                continue
            if g.nodes[j].wing == "R":
                return False
            seen[j] = True
            queue.append(j)
    return True


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(g: BeginGraph, format: str) -> str:
    """Render to DOT (three wing clusters) or JSON; byte-stable output."""
    kind = format.lower()
    if kind == "dot":
        return _export_dot(g)
    if kind == "json":
        return _export_json(g)
    raise ValueError(f"unknown format {format!r}; use dot or json")


def _export_dot(g: BeginGraph) -> str:
    max_w = max((abs(w) for _, _, w in g.edges), default=1.0)
    lines = ["graph begin {", "  node [shape=ellipse];"]
    for wing in ("L", "B", "R"):
        lines.append(f"  subgraph cluster_{wing} {{")
        lines.append(f"    label={_dot_quote(wing)};")
        for i, node in enumerate(g.nodes):
            if node.wing == wing:
                lines.append(f"    n{i} [label={_dot_quote(node.label)}];")
        lines.append("  }")
    for i, j, w in g.edges:
        pen = 0.5 + 2.5 * abs(w) / max_w
        lines.append(f'  n{i} -- n{j} [weight="{w:.17g}", penwidth="{pen:.3f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_json(g: BeginGraph) -> str:
    obj = {
        "width": g.nodes[0].mask.width if g.nodes else 0,
        "tol": g.tol,
        "nodes": [
            {"bits": node.mask.to_string(), "wing": node.wing, "label": node.label}
            for node in g.nodes
        ],
        "edges": [[i, j, w] for i, j, w in g.edges],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_json(text: str) -> BeginGraph:
    """Inverse of the JSON export; rejects structurally invalid payloads."""
    obj = json.loads(text)
    nodes = tuple(
        GraphNode(
            mask=Mask.from_string(entry["bits"]),
            wing=entry["wing"],
            label=entry["label"],
        )
        for entry in obj["nodes"]
    )
    edges = tuple((int(i), int(j), float(w)) for i, j, w in obj["edges"])
    return BeginGraph(nodes=nodes, edges=edges, tol=float(obj["tol"]))
