"""Paragraph graph construction and size-bounded edge-cut partitioning.

The partitioner is multilevel: heavy-edge-matching coarsening, greedy graph
growing for the initial solution, then boundary refinement (single moves plus
pairwise swaps) with per-pass rollback so the cut never increases.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import DocumentRecord
from .relations import SimilarityMatrix

INTRA = "intra"
SIMILARITY = "similarity"

# All-pairs swap scans are quadratic; above this size only cut-edge pairs
# are considered.
_FULL_SWAP_LIMIT = 32


class PartitionError(Exception):
    pass


class InfeasiblePartition(PartitionError):
    pass


@dataclass(frozen=True)
class GraphVertex:
    paragraph_id: str
    document_id: str
    entity_set_id: str | None = None


@dataclass(frozen=True)
class GraphEdge:
    u: str
    v: str
    weight: float
    kind: str


@dataclass(frozen=True)
class ParagraphGraph:
    vertices: tuple[GraphVertex, ...]
    edges: tuple[GraphEdge, ...]
    theta: float

    def vertex_ids(self) -> list[str]:
        return [v.paragraph_id for v in self.vertices]


@dataclass(frozen=True)
class WeightedGraph:
    """Index-based working graph for the partitioner; sizes carry the number
    of original vertices contracted into each node."""

    ids: tuple[str, ...]
    sizes: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    adj: tuple[dict[int, float], ...] = field(compare=False, hash=False, default=())

    def __post_init__(self) -> None:
        adj: list[dict[int, float]] = [dict() for _ in self.ids]
        for u, v, w in self.edges:
            adj[u][v] = adj[u].get(v, 0.0) + w
            adj[v][u] = adj[v].get(u, 0.0) + w
        object.__setattr__(self, "adj", tuple(adj))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def total_size(self) -> int:
        return sum(self.sizes)

    @classmethod
    def from_paragraph_graph(cls, graph: ParagraphGraph) -> "WeightedGraph":
        index = {v.paragraph_id: i for i, v in enumerate(graph.vertices)}
        merged: dict[tuple[int, int], float] = {}
        for e in graph.edges:
            u, v = index[e.u], index[e.v]
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0.0) + e.weight
        edges = tuple((u, v, w) for (u, v), w in sorted(merged.items()))
        return cls(ids=tuple(index), sizes=(1,) * len(index), edges=edges)


@dataclass(frozen=True)
class PartitionResult:
    part_of: dict[str, int]
    parts: tuple[tuple[str, ...], ...]
    max_size: int
    cut_weight: float
    seed: int | None = None
    pass_cuts: tuple[float, ...] = ()

    def to_export_dict(self) -> dict:
        return {
            "parts": [list(p) for p in self.parts],
            "cut_weight": self.cut_weight,
            "max_size": self.max_size,
            "seed": self.seed,
        }


def _as_weighted(graph: ParagraphGraph | WeightedGraph) -> WeightedGraph:
    if isinstance(graph, WeightedGraph):
        return graph
    return WeightedGraph.from_paragraph_graph(graph)


def build_paragraph_graph(
    docs: Sequence[DocumentRecord],
    paragraph_similarities: SimilarityMatrix,
    theta: float,
    entity_set_of: Mapping[str, str] | None = None,
    intra_style: str = "path",
) -> ParagraphGraph:
    """Vertices are the documents' paragraphs; paragraphs of one document are
    joined by unit-weight intra edges (a narrative-order path by default, a
    clique with ``intra_style="clique"``), and cross-document pairs with
    similarity strictly above theta by similarity-weighted edges."""
    if not docs:
        raise PartitionError("no documents selected")
    if not (0.0 <= theta <= 1.0):
        raise PartitionError(f"theta must be in [0, 1], got {theta}")
    if intra_style not in ("path", "clique"):
        raise PartitionError(f"unknown intra edge style: {intra_style!r}")
    entity_set_of = entity_set_of or {}
    vertices: list[GraphVertex] = []
    doc_of: dict[str, str] = {}
    for doc in docs:
        for pid in doc.paragraph_ids:
            vertices.append(GraphVertex(paragraph_id=pid, document_id=doc.id, entity_set_id=entity_set_of.get(pid)))
            doc_of[pid] = doc.id

    edges: list[GraphEdge] = []
    for doc in docs:
        if intra_style == "path":
            pairs = zip(doc.paragraph_ids, doc.paragraph_ids[1:])
        else:
            pairs = (
                (a, b)
                for i, a in enumerate(doc.paragraph_ids)
                for b in doc.paragraph_ids[i + 1 :]
            )
        for a, b in pairs:
            edges.append(GraphEdge(u=a, v=b, weight=1.0, kind=INTRA))

    ids = paragraph_similarities.ids
    pos = {pid: i for i, pid in enumerate(ids)}
    vertex_ids = [v.paragraph_id for v in vertices]
    for i, a in enumerate(vertex_ids):
        if a not in pos:
            continue
        for b in vertex_ids[i + 1 :]:
            if b not in pos or doc_of[a] == doc_of[b]:
                continue
            sim = float(paragraph_similarities.values[pos[a], pos[b]])
            if sim > theta:
                edges.append(GraphEdge(u=a, v=b, weight=sim, kind=SIMILARITY))
    return ParagraphGraph(vertices=tuple(vertices), edges=tuple(edges), theta=theta)


def edge_cut(graph: ParagraphGraph | WeightedGraph, part_of: Mapping[str, int]) -> float:
    """Total weight of edges whose endpoints lie in different parts."""
    wg = _as_weighted(graph)
    for vid in wg.ids:
        if vid not in part_of:
            raise PartitionError(f"partition does not cover vertex {vid}")
    total = 0.0
    for u, v, w in wg.edges:
        if part_of[wg.ids[u]] != part_of[wg.ids[v]]:
            total += w
    return total


def coarsen(
    graph: ParagraphGraph | WeightedGraph,
    max_vertex_size: int | None = None,
    visit_order: Sequence[int] | None = None,
) -> tuple[WeightedGraph, dict[str, str]]:
    """One level of heavy-edge matching.

    Each unmatched vertex is matched to its heaviest-edge unmatched neighbor
    (ties to the lower index); matched pairs contract into a vertex carrying
    the summed size, parallel edges merging with summed weight. A graph with
    no matchable edge is returned unchanged.
    """
    wg = _as_weighted(graph)
    order = list(visit_order) if visit_order is not None else list(range(wg.n))
    match = [-1] * wg.n
    for u in order:
        if match[u] != -1:
            continue
        best, best_w = -1, -math.inf
        for v, w in wg.adj[u].items():
            if match[v] != -1:
                continue
            if max_vertex_size is not None and wg.sizes[u] + wg.sizes[v] > max_vertex_size:
                continue
            if w > best_w or (w == best_w and v < best):
                best, best_w = v, w
        if best != -1:
            match[u] = best
            match[best] = u

    if all(m == -1 for m in match):
        return wg, {vid: vid for vid in wg.ids}

    coarse_of: dict[int, int] = {}
    coarse_ids: list[str] = []
    coarse_sizes: list[int] = []
    for u in range(wg.n):
        if u in coarse_of:
            continue
        v = match[u]
        members = [u] if v == -1 else [u, v]
        idx = len(coarse_ids)
        for m in members:
            coarse_of[m] = idx
        coarse_ids.append(min(wg.ids[m] for m in members))
        coarse_sizes.append(sum(wg.sizes[m] for m in members))

    merged: dict[tuple[int, int], float] = {}
    for u, v, w in wg.edges:
        cu, cv = coarse_of[u], coarse_of[v]
        if cu == cv:
            continue
        key = (min(cu, cv), max(cu, cv))
        merged[key] = merged.get(key, 0.0) + w
    coarse = WeightedGraph(
        ids=tuple(coarse_ids),
        sizes=tuple(coarse_sizes),
        edges=tuple((u, v, w) for (u, v), w in sorted(merged.items())),
    )
    mapping = {wg.ids[u]: coarse_ids[coarse_of[u]] for u in range(wg.n)}
    return coarse, mapping


def initial_partition(
    graph: ParagraphGraph | WeightedGraph,
    k: int,
    max_size: int,
    seed: int = 0,
    seed_order: Sequence[int] | None = None,
) -> PartitionResult:
    """Greedy graph growing: seed each part with the highest-degree unassigned
    vertex, grow by the frontier vertex with the best connectivity into the
    part while the size bound allows, then pack leftovers into the
    least-loaded part that fits."""
    wg = _as_weighted(graph)
    if k < 1:
        raise PartitionError("part count must be >= 1")
    if wg.total_size > k * max_size or any(s > max_size for s in wg.sizes):
        raise InfeasiblePartition(
            f"total size {wg.total_size} does not fit into {k} parts of at most {max_size}"
        )
    degree = [sum(wg.adj[u].values()) for u in range(wg.n)]
    assigned = [-1] * wg.n
    loads = [0] * k
    seed_pool = list(seed_order) if seed_order is not None else sorted(
        range(wg.n), key=lambda u: (-degree[u], u)
    )

    for part in range(k):
        seed_vertex = next((u for u in seed_pool if assigned[u] == -1 and wg.sizes[u] + loads[part] <= max_size), None)
        if seed_vertex is None:
            continue
        assigned[seed_vertex] = part
        loads[part] += wg.sizes[seed_vertex]
        frontier_gain: dict[int, float] = {}
        for v, w in wg.adj[seed_vertex].items():
            if assigned[v] == -1:
                frontier_gain[v] = w
        while frontier_gain:
            candidates = [v for v in frontier_gain if loads[part] + wg.sizes[v] <= max_size]
            if not candidates:
                break
            best = min(candidates, key=lambda v: (-frontier_gain[v], v))
            del frontier_gain[best]
            assigned[best] = part
            loads[part] += wg.sizes[best]
            for v, w in wg.adj[best].items():
                if assigned[v] == -1:
                    frontier_gain[v] = frontier_gain.get(v, 0.0) + w

    leftovers = sorted((u for u in range(wg.n) if assigned[u] == -1), key=lambda u: (-wg.sizes[u], u))
    for u in leftovers:
        candidates = [p for p in range(k) if loads[p] + wg.sizes[u] <= max_size]
        if not candidates:
            raise InfeasiblePartition(f"no part can take vertex {wg.ids[u]} of size {wg.sizes[u]}")
        target = min(candidates, key=lambda p: (loads[p], p))
        assigned[u] = target
        loads[target] += wg.sizes[u]

    return _result(wg, assigned, k, max_size, seed)


def _result(
    wg: WeightedGraph,
    assigned: Sequence[int],
    k: int,
    max_size: int,
    seed: int | None,
    pass_cuts: tuple[float, ...] = (),
) -> PartitionResult:
    part_of = {wg.ids[u]: assigned[u] for u in range(wg.n)}
    parts: list[list[str]] = [[] for _ in range(k)]
    for u in range(wg.n):
        parts[assigned[u]].append(wg.ids[u])
    return PartitionResult(
        part_of=part_of,
        parts=tuple(tuple(p) for p in parts),
        max_size=max_size,
        cut_weight=edge_cut(wg, part_of),
        seed=seed,
        pass_cuts=pass_cuts,
    )


def _connectivity(wg: WeightedGraph, assigned: list[int], u: int) -> dict[int, float]:
    conn: dict[int, float] = {}
    for v, w in wg.adj[u].items():
        p = assigned[v]
        conn[p] = conn.get(p, 0.0) + w
    return conn


def _single_move_pass(
    wg: WeightedGraph, assigned: list[int], loads: list[int], k: int, max_size: int
) -> float:
    """One FM pass: greedy best-gain moves with locking, then rollback to the
    best prefix. Returns the (non-negative) cut reduction achieved."""
    locked = [False] * wg.n
    trail: list[tuple[int, int, int]] = []  # vertex, from, to
    gains: list[float] = []
    cumulative = 0.0
    for _ in range(wg.n):
        best = None  # (gain, vertex, target)
        for u in range(wg.n):
            if locked[u] or not wg.adj[u]:
                continue
            conn = _connectivity(wg, assigned, u)
            own = conn.get(assigned[u], 0.0)
            if len(conn) == 1 and assigned[u] in conn:
                continue  # interior vertex
            targets = set(conn) | {min(range(k), key=lambda p: (loads[p], p))}
            for p in targets:
                if p == assigned[u] or loads[p] + wg.sizes[u] > max_size:
                    continue
                gain = conn.get(p, 0.0) - own
                if best is None or gain > best[0] or (gain == best[0] and (u, p) < (best[1], best[2])):
                    best = (gain, u, p)
        if best is None:
            break
        gain, u, target = best
        trail.append((u, assigned[u], target))
        loads[assigned[u]] -= wg.sizes[u]
        loads[target] += wg.sizes[u]
        assigned[u] = target
        locked[u] = True
        cumulative += gain
        gains.append(cumulative)

    if not gains:
        return 0.0
    best_prefix = max(range(len(gains)), key=lambda i: gains[i])
    best_gain = gains[best_prefix]
    keep = best_prefix + 1 if best_gain > 0 else 0
    for u, source, target in reversed(trail[keep:]):
        loads[target] -= wg.sizes[u]
        loads[source] += wg.sizes[u]
        assigned[u] = source
    return max(best_gain, 0.0)


def _swap_pass(
    wg: WeightedGraph, assigned: list[int], loads: list[int], max_size: int
) -> float:
    """Pairwise-exchange pass with locking and best-prefix rollback; escapes
    states where every single move is blocked by the size bound."""
    locked = [False] * wg.n
    trail: list[tuple[int, int]] = []
    gains: list[float] = []
    cumulative = 0.0
    full = wg.n <= _FULL_SWAP_LIMIT
    for _ in range(wg.n // 2 + 1):
        if full:
            pairs = (
                (u, v)
                for u in range(wg.n)
                for v in range(u + 1, wg.n)
                if assigned[u] != assigned[v]
            )
        else:
            pairs = ((min(u, v), max(u, v)) for u, v, _ in wg.edges if assigned[u] != assigned[v])
        best = None  # (gain, u, v)
        seen: set[tuple[int, int]] = set()
        for u, v in pairs:
            if locked[u] or locked[v] or (u, v) in seen:
                continue
            seen.add((u, v))
            pu, pv = assigned[u], assigned[v]
            if loads[pu] - wg.sizes[u] + wg.sizes[v] > max_size:
                continue
            if loads[pv] - wg.sizes[v] + wg.sizes[u] > max_size:
                continue
            conn_u = _connectivity(wg, assigned, u)
            conn_v = _connectivity(wg, assigned, v)
            gain = (
                conn_u.get(pv, 0.0)
                - conn_u.get(pu, 0.0)
                + conn_v.get(pu, 0.0)
                - conn_v.get(pv, 0.0)
                - 2.0 * wg.adj[u].get(v, 0.0)
            )
            if best is None or gain > best[0] or (gain == best[0] and (u, v) < (best[1], best[2])):
                best = (gain, u, v)
        if best is None:
            break
        gain, u, v = best
        pu, pv = assigned[u], assigned[v]
        loads[pu] += wg.sizes[v] - wg.sizes[u]
        loads[pv] += wg.sizes[u] - wg.sizes[v]
        assigned[u], assigned[v] = pv, pu
        locked[u] = locked[v] = True
        trail.append((u, v))
        cumulative += gain
        gains.append(cumulative)

    if not gains:
        return 0.0
    best_prefix = max(range(len(gains)), key=lambda i: gains[i])
    best_gain = gains[best_prefix]
    keep = best_prefix + 1 if best_gain > 0 else 0
    for u, v in reversed(trail[keep:]):
        pu, pv = assigned[u], assigned[v]
        loads[pu] += wg.sizes[v] - wg.sizes[u]
        loads[pv] += wg.sizes[u] - wg.sizes[v]
        assigned[u], assigned[v] = pv, pu
    return max(best_gain, 0.0)


def refine(
    graph: ParagraphGraph | WeightedGraph,
    partition: PartitionResult,
    max_size: int,
) -> PartitionResult:
    """Local search on the boundary until a full pass yields no improvement.

    Single moves and pairwise swaps alternate; rollback inside every pass
    guarantees the cut never increases.
    """
    wg = _as_weighted(graph)
    k = len(partition.parts)
    assigned = [partition.part_of[vid] for vid in wg.ids]
    loads = [0] * k
    for u in range(wg.n):
        if not 0 <= assigned[u] < k:
            raise PartitionError(f"vertex {wg.ids[u]} assigned to invalid part {assigned[u]}")
        loads[assigned[u]] += wg.sizes[u]
    if any(load > max_size for load in loads):
        raise PartitionError("input partition violates the size bound")

    pass_cuts = [edge_cut(wg, {wg.ids[u]: assigned[u] for u in range(wg.n)})]
    while True:
        moved = _single_move_pass(wg, assigned, loads, k, max_size)
        pass_cuts.append(pass_cuts[-1] - moved)
        swapped = _swap_pass(wg, assigned, loads, max_size)
        pass_cuts.append(pass_cuts[-1] - swapped)
        if moved <= 0.0 and swapped <= 0.0:
            break
    return _result(wg, assigned, k, max_size, partition.seed, tuple(pass_cuts))


def partition_graph(
    graph: ParagraphGraph | WeightedGraph,
    max_size: int,
    seed: int = 0,
) -> PartitionResult:
    """Partition into ceil(|V| / max_size) parts of at most max_size vertices,
    minimizing edge cut. Deterministic for a fixed seed."""
    if max_size < 1:
        raise PartitionError("max_size must be >= 1")
    wg = _as_weighted(graph)
    if wg.n == 0:
        raise PartitionError("empty graph")
    k = math.ceil(wg.total_size / max_size)
    rng = random.Random(seed)

    if wg.total_size <= max_size:
        assigned = [0] * wg.n
        return _result(wg, assigned, 1, max_size, seed)

    # Coarsening phase; every contraction respects the size bound so the
    # coarse problem stays feasible.
    levels: list[tuple[WeightedGraph, dict[str, str]]] = []
    g = wg
    while g.n > max(2 * k, 16):
        order = list(range(g.n))
        rng.shuffle(order)
        coarse, mapping = coarsen(g, max_vertex_size=max_size, visit_order=order)
        if coarse.n >= g.n:
            break
        levels.append((g, mapping))
        g = coarse

    restarts = 12 if g.n <= _FULL_SWAP_LIMIT else 4
    best: PartitionResult | None = None
    for attempt in range(restarts):
        try:
            if attempt == 0:
                initial = initial_partition(g, k, max_size, seed)
            else:
                order = list(range(g.n))
                rng.shuffle(order)
                initial = initial_partition(g, k, max_size, seed, seed_order=order)
        except InfeasiblePartition:
            continue
        refined = refine(g, initial, max_size)
        if best is None or refined.cut_weight < best.cut_weight:
            best = refined
        if best.cut_weight == 0.0:
            break

    if best is None:
        # Coarse-level packing failed; partition the finest graph directly
        # (unit sizes always pack when total <= k * max_size).
        levels = []
        g = wg
        initial = initial_partition(g, k, max_size, seed)
        best = refine(g, initial, max_size)

    part_of = dict(best.part_of)
    for fine, mapping in reversed(levels):
        projected = {vid: part_of[mapping[vid]] for vid in fine.ids}
        projected_result = _result(fine, [projected[vid] for vid in fine.ids], k, max_size, seed)
        best = refine(fine, projected_result, max_size)
        part_of = dict(best.part_of)

    return PartitionResult(
        part_of=best.part_of,
        parts=best.parts,
        max_size=max_size,
        cut_weight=best.cut_weight,
        seed=seed,
        pass_cuts=best.pass_cuts,
    )
