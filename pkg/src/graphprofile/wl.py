"""Rooted-subgraph context tokens via Weisfeiler-Lehman relabeling.

A degree-d token canonically encodes the subgraph reachable within d hops
(along outgoing edges) of a root node:

    degree 0:  the root's raw label
    degree d:  token(root, d-1) "(" comma-joined sorted token(n', d-1) ")"
               over out-neighbors n'

Sorting the neighbor tokens removes edge-order dependence, so the token
is a pure function of (graph, root, degree) and isomorphic graphs yield
identical token multisets. Label text is escaped before being embedded in
a composite token, which keeps the encoding injective even when labels
contain "(", ")" or ","; the degree-0 token itself is the unescaped label.
A node with no out-neighbors still produces a token at every degree
(``prev "()"``), so a graph always yields exactly |N|*(D+1) tokens.
"""
from __future__ import annotations

from dataclasses import dataclass

from .data import DependencyGraph

_ESCAPES = {"\\": "\\\\", "(": "\\(", ")": "\\)", ",": "\\,"}


def _escape(label: str) -> str:
    if any(ch in label for ch in "\\(),"):
        for raw, esc in _ESCAPES.items():
            label = label.replace(raw, esc)
    return label


@dataclass(frozen=True)
class SubgraphToken:
    text: str
    degree: int
    view_name: str


def token_texts_by_degree(graph: DependencyGraph, max_degree: int) -> list[list[str]]:
    """Token text for every (degree, node), computed bottom-up.

    Returns ``levels`` with ``levels[d][n]`` the degree-d token of node n.
    Dynamic programming over degrees gives the same strings as the literal
    recursion without the exponential recomputation.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    n = graph.num_nodes
    adj = graph.out_neighbors()
    raw = list(graph.node_labels)
    prev = [_escape(lbl) for lbl in raw]
    # Degree 0 is the unescaped label; escaped text seeds the composites.
    levels = [raw]
    for _ in range(max_degree):
        cur = [prev[i] + "(" + ",".join(sorted(prev[j] for j in adj[i])) + ")" for i in range(n)]
        levels.append(cur)
        prev = cur
    return levels


def wl_subgraph(node: int, graph: DependencyGraph, degree: int) -> SubgraphToken:
    """The degree-d rooted-subgraph token around one node."""
    if not 0 <= node < graph.num_nodes:
        raise ValueError(f"node index {node} out of range for {graph.num_nodes} nodes")
    levels = token_texts_by_degree(graph, degree)
    return SubgraphToken(levels[degree][node], degree, graph.view_name)


def get_subgraphs(graph: DependencyGraph, max_degree: int) -> list[SubgraphToken]:
    """All rooted-subgraph tokens of degrees 0..max_degree, one per (node, degree).

    The result is a multiset (duplicates preserved) of size |N|*(D+1),
    ordered node-major then by degree.
    """
    levels = token_texts_by_degree(graph, max_degree)
    view = graph.view_name
    return [
        SubgraphToken(levels[d][node], d, view)
        for node in range(graph.num_nodes)
        for d in range(max_degree + 1)
    ]
