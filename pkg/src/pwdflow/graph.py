"""Derived graph structure: schedules and reachability.

Input and output nodes are data, not tasks, so topological orders and
ready schedules cover function nodes only; reachability closures walk
the full graph.
"""

from __future__ import annotations

import heapq
from collections import deque

from .model import Edge, Function, WorkflowDocument


def _function_adjacency(doc: WorkflowDocument) -> tuple[dict[int, list[int]], dict[int, int]]:
    fn_ids = {n.id for n in doc.nodes if isinstance(n.kind, Function)}
    succs: dict[int, list[int]] = {nid: [] for nid in fn_ids}
    indeg: dict[int, int] = {nid: 0 for nid in fn_ids}
    for edge in doc.edges:
        if edge.source in fn_ids and edge.target in fn_ids:
            succs[edge.source].append(edge.target)
            indeg[edge.target] += 1
    return succs, indeg


def function_predecessors(doc: WorkflowDocument) -> dict[int, set[int]]:
    """Map each function node to the function nodes that feed it."""
    fn_ids = {n.id for n in doc.nodes if isinstance(n.kind, Function)}
    preds: dict[int, set[int]] = {nid: set() for nid in fn_ids}
    for edge in doc.edges:
        if edge.source in fn_ids and edge.target in fn_ids:
            preds[edge.target].add(edge.source)
    return preds


def topo_sort(doc: WorkflowDocument) -> list[int]:
    """Deterministic topological order of the function nodes.

    Ties are broken by ascending node id, which makes the result the
    lexicographically smallest valid order.
    """
    succs, indeg = _function_adjacency(doc)
    heap = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        nid = heapq.heappop(heap)
        order.append(nid)
        for succ in succs[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, succ)
    # Valid documents are acyclic by construction.
    assert len(order) == len(succs), "document contains a function-node cycle"
    return order


def ready_schedule(doc: WorkflowDocument) -> list[set[int]]:
    """Group function nodes into dispatch levels.

    Level k holds exactly the nodes whose function-node predecessors all
    sit in levels < k, so the level count equals the longest
    function-node path length plus one.
    """
    preds = function_predecessors(doc)
    level: dict[int, int] = {}
    for nid in topo_sort(doc):
        level[nid] = 1 + max((level[p] for p in preds[nid]), default=-1)
    levels: list[set[int]] = [set() for _ in range(max(level.values(), default=-1) + 1)]
    for nid, k in level.items():
        levels[k].add(nid)
    return levels


def _closure(doc: WorkflowDocument, start: int, *, forward: bool) -> set[int]:
    doc.node(start)  # raises UnknownNodeIdError for absent ids
    adj: dict[int, list[int]] = {}
    for edge in doc.edges:
        a, b = (edge.source, edge.target) if forward else (edge.target, edge.source)
        adj.setdefault(a, []).append(b)
    seen: set[int] = set()
    queue = deque(adj.get(start, ()))
    while queue:
        nid = queue.popleft()
        if nid in seen:
            continue
        seen.add(nid)
        queue.extend(adj.get(nid, ()))
    seen.discard(start)
    return seen


def upstream_closure(doc: WorkflowDocument, node_id: int) -> set[int]:
    """All nodes from which ``node_id`` is reachable, excluding itself."""
    return _closure(doc, node_id, forward=False)


def downstream_closure(doc: WorkflowDocument, node_id: int) -> set[int]:
    """All nodes reachable from ``node_id``, excluding itself."""
    return _closure(doc, node_id, forward=True)
