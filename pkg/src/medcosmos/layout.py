"""Position solvers for the coordinated views.

Two solvers live here: a 3D force layout for the document space (attraction
proportional to similarity above the threshold, uniform repulsion) and the
circular star map, where each paragraph star feels intra-document and
similarity gravity, a type-pole spring mix weighted by its entity counts,
and a collision force that keeps stars legible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .extraction import EntitySet
from .palette import CONSTELLATION_COLORS
from .partition import INTRA, SIMILARITY, ParagraphGraph
from .relations import SimilarityMatrix

N_POLES = 9

DEFAULT_BOUNDARY_RADIUS = 1.0
DEFAULT_UNIT_FORCE = 1.0
DEFAULT_PADDING_SCALE = 0.02
DEFAULT_STAR_RADIUS_SCALE = 0.02
DEFAULT_TOLERANCE_SCALE = 1e-3
DEFAULT_MAX_ITERS = 2000
COLLISION_CAP = 4.0  # in units of the unit force
DISPLACEMENT_CAP = 4.0  # per-tick speed limit, in unit forces

SPACE_EXTENT = 10.0
SPACE_ITERATIONS = 300
SPACE_BASE_RADIUS = 0.3
_EPS = 1e-12


class LayoutError(Exception):
    pass


@dataclass(frozen=True)
class SpaceNode:
    document_id: str
    position: tuple[float, float, float]
    radius: float
    topic_color_index: int | None = None


@dataclass(frozen=True)
class LayoutResult:
    positions: dict[str, tuple[float, float]]
    iterations_used: int
    max_residual: float


def pole_positions(boundary_radius: float) -> np.ndarray:
    """The nine type poles, uniformly spaced on the boundary circle in type
    code order (code j sits at angle 2*pi*j/9)."""
    angles = 2.0 * math.pi * np.arange(N_POLES) / N_POLES
    return np.stack([boundary_radius * np.cos(angles), boundary_radius * np.sin(angles)], axis=1)


@dataclass
class StarMapState:
    boundary_radius: float
    unit_force: float
    theta: float
    seed: int
    padding: float
    ids: tuple[str, ...]
    document_ids: tuple[str, ...]
    part_index: tuple[int, ...]
    positions: np.ndarray  # (n, 2)
    radii: np.ndarray  # (n,)
    type_counts: np.ndarray  # (n, 9)
    totals: np.ndarray  # (n,)
    poles: np.ndarray  # (9, 2)
    constellation_color: tuple[str, ...]
    brightness_level: np.ndarray  # (n,)
    border_luminance: np.ndarray  # (n,)
    force_accumulator: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    _intra_edges: np.ndarray | None = None
    _sim_edges: np.ndarray | None = None
    _sim_weights: np.ndarray | None = None
    _contact: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.ids)

    def index_of(self, paragraph_id: str) -> int:
        return self.ids.index(paragraph_id)


def star_styles(
    paragraph_ids: Sequence[str],
    document_ids: Sequence[str],
    totals: Sequence[int],
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Constellation color, brightness ramp and border luminance per star.

    Stars of one document share a hue; brightness ramps linearly over the
    document's stars; border luminance is the min-max normalized entity
    count mapped to [0.3, 1.0] (all-equal collapses to 1.0).
    """
    unique_docs = sorted(set(document_ids))
    hue_of = {doc: CONSTELLATION_COLORS[i % len(CONSTELLATION_COLORS)] for i, doc in enumerate(unique_docs)}
    colors = [hue_of[doc] for doc in document_ids]

    brightness = np.zeros(len(paragraph_ids))
    for doc in unique_docs:
        members = [i for i, d in enumerate(document_ids) if d == doc]
        members.sort(key=lambda i: paragraph_ids[i])
        m = len(members)
        for rank, i in enumerate(members):
            brightness[i] = (rank + 0.5) / m

    totals_arr = np.asarray(totals, dtype=np.float64)
    low, high = float(totals_arr.min()), float(totals_arr.max())
    if high > low:
        luminance = 0.3 + 0.7 * (totals_arr - low) / (high - low)
    else:
        luminance = np.ones_like(totals_arr)
    return colors, brightness, luminance


def init_star_map(
    graph: ParagraphGraph,
    entity_sets: Mapping[str, EntitySet],
    parts: Sequence[Sequence[str]],
    boundary_radius: float = DEFAULT_BOUNDARY_RADIUS,
    unit_force: float = DEFAULT_UNIT_FORCE,
    seed: int = 0,
    star_radius_scale: float = DEFAULT_STAR_RADIUS_SCALE,
    padding_scale: float = DEFAULT_PADDING_SCALE,
) -> StarMapState:
    """Seed a star map for the selected subgraph parts of a paragraph graph.

    Stars start at deterministic jittered positions inside the disc; the nine
    poles are fixed on the boundary.
    """
    if not parts or all(len(p) == 0 for p in parts):
        raise LayoutError("no subgraph parts selected")
    if unit_force <= 0:
        raise LayoutError("unit force must be positive")
    doc_of = {v.paragraph_id: v.document_id for v in graph.vertices}

    ids: list[str] = []
    part_index: list[int] = []
    for pi, part in enumerate(parts):
        for pid in part:
            if pid not in doc_of:
                raise LayoutError(f"paragraph {pid} is not a vertex of the graph")
            ids.append(pid)
            part_index.append(pi)

    n = len(ids)
    counts = np.zeros((n, N_POLES))
    totals = np.zeros(n)
    for i, pid in enumerate(ids):
        es = entity_sets.get(pid)
        if es is None:
            continue
        for etype, count in es.counts_by_type.items():
            counts[i, int(etype)] = count
        totals[i] = es.total

    rng = np.random.default_rng(seed)
    radii_r = 0.5 * boundary_radius * np.sqrt(rng.random(n))
    angles = 2.0 * math.pi * rng.random(n)
    positions = np.stack([radii_r * np.cos(angles), radii_r * np.sin(angles)], axis=1)

    doc_ids = tuple(doc_of[pid] for pid in ids)
    colors, brightness, luminance = star_styles(ids, doc_ids, totals)

    return StarMapState(
        boundary_radius=boundary_radius,
        unit_force=unit_force,
        theta=graph.theta,
        seed=seed,
        padding=padding_scale * boundary_radius,
        ids=tuple(ids),
        document_ids=doc_ids,
        part_index=tuple(part_index),
        positions=positions,
        radii=np.full(n, star_radius_scale * boundary_radius),
        type_counts=counts,
        totals=totals,
        poles=pole_positions(boundary_radius),
        constellation_color=tuple(colors),
        brightness_level=brightness,
        border_luminance=luminance,
        force_accumulator=np.zeros((n, 2)),
    )


def _edge_arrays(state: StarMapState, graph: ParagraphGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if state._intra_edges is not None:
        return state._intra_edges, state._sim_edges, state._sim_weights
    index = {pid: i for i, pid in enumerate(state.ids)}
    intra: list[tuple[int, int]] = []
    sim: list[tuple[int, int]] = []
    sim_w: list[float] = []
    for e in graph.edges:
        if e.u not in index or e.v not in index:
            continue
        if e.kind == INTRA:
            intra.append((index[e.u], index[e.v]))
        elif e.kind == SIMILARITY and e.weight > state.theta:
            sim.append((index[e.u], index[e.v]))
            sim_w.append(e.weight)
    state._intra_edges = np.asarray(intra, dtype=np.intp).reshape(-1, 2)
    state._sim_edges = np.asarray(sim, dtype=np.intp).reshape(-1, 2)
    state._sim_weights = np.asarray(sim_w, dtype=np.float64)
    return state._intra_edges, state._sim_edges, state._sim_weights


def _unit_vectors(diff: np.ndarray) -> np.ndarray:
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    return np.divide(diff, dist, out=np.zeros_like(diff), where=dist > _EPS)


def _pairwise(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs separation vectors and distances (diagonal set to inf)."""
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    np.fill_diagonal(dist, np.inf)
    return diff, dist


def _separation_directions(state: StarMapState, diff: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Unit vectors pushing i away from j; coincident pairs get a
    deterministic index-ordered fallback along the x axis."""
    direction = np.divide(
        diff, dist[:, :, None], out=np.zeros_like(diff), where=dist[:, :, None] > _EPS
    )
    coincident = np.argwhere(dist <= _EPS)
    for i, j in coincident:
        direction[i, j, 0] = 1.0 if i > j else -1.0
    return direction


def _clamp_to_disc(state: StarMapState) -> None:
    limit = state.boundary_radius - state.radii
    norms = np.linalg.norm(state.positions, axis=1)
    over = norms > limit
    if np.any(over):
        scale = np.ones_like(norms)
        scale[over] = limit[over] / norms[over]
        state.positions = state.positions * scale[:, None]


def _contact_matrix(state: StarMapState) -> np.ndarray:
    if state._contact is None or state._contact.shape[0] != state.n:
        state._contact = state.radii[:, None] + state.radii[None, :]
    return state._contact


def _project_overlaps(
    state: StarMapState, dist: np.ndarray, direction: np.ndarray, damping: float = 1.0
) -> tuple[float, float]:
    """One overlap-resolution sweep: truly overlapping pairs are pushed apart
    symmetrically by their penetration depth. Crowded clusters where the
    summed attraction beats the capped collision force cannot separate by
    force balance alone; this keeps the non-overlap guarantee exact.
    Returns (max shift, max depth seen)."""
    depth = _contact_matrix(state) - dist
    worst = float(depth.max())
    if worst <= 0:
        return 0.0, worst
    push = np.where(depth > 0, depth, 0.0)
    shift = (0.5 * damping) * np.einsum("ij,ijk->ik", push, direction)
    state.positions = state.positions + shift
    _clamp_to_disc(state)
    return float(np.abs(shift).max()), worst


def compute_forces(
    state: StarMapState,
    graph: ParagraphGraph,
    _geometry: tuple[np.ndarray, np.ndarray] | None = None,
    _direction: np.ndarray | None = None,
) -> np.ndarray:
    """Per-star combined force: gravity (intra + similarity), the nine-pole
    spring mix, and pairwise collision repulsion."""
    n = state.n
    forces = np.zeros((n, 2))
    unit_force = state.unit_force
    intra, sim, sim_w = _edge_arrays(state, graph)

    # Intra-document gravity: unit-magnitude pull along each structural edge.
    if len(intra):
        diff = state.positions[intra[:, 1]] - state.positions[intra[:, 0]]
        unit = _unit_vectors(diff)
        np.add.at(forces, intra[:, 0], unit_force * unit)
        np.add.at(forces, intra[:, 1], -unit_force * unit)

    # Similarity gravity: magnitude scales with the pair similarity.
    if len(sim):
        diff = state.positions[sim[:, 1]] - state.positions[sim[:, 0]]
        unit = _unit_vectors(diff)
        scaled = unit_force * sim_w[:, None] * unit
        np.add.at(forces, sim[:, 0], scaled)
        np.add.at(forces, sim[:, 1], -scaled)

    # Pole springs: convex mix of pulls toward the nine poles, weighted by
    # the star's per-type entity counts; zero for entity-free stars.
    safe_totals = np.where(state.totals > 0, state.totals, 1.0)
    weights = state.type_counts / safe_totals[:, None]
    pole_diff = state.poles[None, :, :] - state.positions[:, None, :]
    pole_unit = _unit_vectors(pole_diff)
    forces += unit_force * np.einsum("ij,ijk->ik", weights, pole_unit)

    # Collision: linear ramp inside the padded contact band, balanced at half
    # padding so converged neighbors settle strictly apart, capped to stay
    # integrator-friendly.
    diff, dist = _geometry if _geometry is not None else _pairwise(state.positions)
    overlap = _contact_matrix(state) + state.padding - dist
    active = overlap > 0
    if np.any(active):
        direction = _direction if _direction is not None else _separation_directions(state, diff, dist)
        magnitude = np.minimum(
            unit_force * 2.0 * overlap / state.padding, COLLISION_CAP * unit_force
        )
        magnitude = np.where(active, magnitude, 0.0)
        forces += np.einsum("ij,ijk->ik", magnitude, direction)

    return forces


def spring_force(state: StarMapState, star_index: int) -> np.ndarray:
    """The pole-spring component alone for one star (diagnostics/tests)."""
    total = state.totals[star_index]
    if total <= 0:
        return np.zeros(2)
    weights = state.type_counts[star_index] / total
    diff = state.poles - state.positions[star_index]
    unit = _unit_vectors(diff)
    return state.unit_force * (weights[:, None] * unit).sum(axis=0)


def step(state: StarMapState, graph: ParagraphGraph, step_size: float) -> np.ndarray:
    """Advance one tick; returns per-star displacement magnitudes.

    A tick resolves leftover overlaps, integrates the combined forces, and
    clamps positions to the disc; the force accumulator is cleared.
    """
    if step_size <= 0:
        raise LayoutError("step size must be positive")
    before = state.positions.copy()
    diff, dist = _pairwise(state.positions)
    direction = _separation_directions(state, diff, dist)
    _project_overlaps(state, dist, direction, damping=0.6)
    forces = compute_forces(state, graph, _geometry=(diff, dist), _direction=direction)
    bad = np.where(~np.isfinite(forces).all(axis=1))[0]
    if len(bad):
        raise LayoutError(f"non-finite force on star {state.ids[int(bad[0])]}")
    state.force_accumulator = forces
    # Velocity clamp: displacement per tick is capped so dense clusters with
    # large aggregate pulls cannot stall convergence of the decaying schedule.
    move = step_size * forces
    norms = np.linalg.norm(move, axis=1)
    limit = step_size * DISPLACEMENT_CAP * state.unit_force
    over = norms > limit
    if np.any(over):
        move[over] *= (limit / norms[over])[:, None]
    state.positions = state.positions + move
    _clamp_to_disc(state)
    displacement = np.linalg.norm(state.positions - before, axis=1)
    state.force_accumulator = np.zeros_like(forces)
    return displacement


def solve(
    state: StarMapState,
    graph: ParagraphGraph,
    tolerance: float | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> LayoutResult:
    """Iterate with a geometrically decaying step (0.99 per tick from
    0.1 * R) until the largest per-star displacement drops below tolerance."""
    if max_iters < 1:
        raise LayoutError("max_iters must be >= 1")
    if tolerance is None:
        tolerance = DEFAULT_TOLERANCE_SCALE * state.boundary_radius
    if tolerance <= 0:
        raise LayoutError("tolerance must be positive")
    step_size = 0.1 * state.boundary_radius
    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        displacement = step(state, graph, step_size)
        residual = float(displacement.max()) if len(displacement) else 0.0
        if residual < tolerance:
            break
        step_size *= 0.99
    _settle(state)
    positions = {pid: (float(x), float(y)) for pid, (x, y) in zip(state.ids, state.positions)}
    return LayoutResult(positions=positions, iterations_used=iterations, max_residual=residual)


def _settle(state: StarMapState, max_sweeps: int = 200) -> None:
    """Post-convergence cleanup: resolve remaining overlaps pair by pair
    (Gauss-Seidel sweeps in fixed order) until every pair is separated. The
    last force tick can leave overlaps of the order of the final step size,
    and simultaneous (Jacobi) pushes stall in dense rim clusters."""
    margin = 0.05 * state.padding
    for _ in range(max_sweeps):
        _, dist = _pairwise(state.positions)
        depth = _contact_matrix(state) - dist
        if float(depth.max()) <= 1e-7 * state.boundary_radius:
            break
        pairs = np.argwhere(np.triu(depth > 0, k=1))
        for i, j in pairs:
            d = state.positions[i] - state.positions[j]
            dn = float(np.hypot(d[0], d[1]))
            target = float(state.radii[i] + state.radii[j]) + margin
            if dn <= _EPS:
                u = np.array([1.0, 0.0])
                need = target
            else:
                need = target - dn
                if need <= 0:
                    continue  # an earlier pair update already separated them
                u = d / dn
            state.positions[i] += 0.5 * need * u
            state.positions[j] -= 0.5 * need * u
        _clamp_to_disc(state)


def layout_space(
    doc_ids: Sequence[str],
    text_lengths: Mapping[str, int],
    doc_similarities: SimilarityMatrix,
    theta: float,
    seed: int = 0,
    topic_of: Mapping[str, int] | None = None,
) -> list[SpaceNode]:
    """3D layout of documents: similarity-proportional spring attraction for
    pairs above theta, uniform inverse-square repulsion, 300 decaying-step
    iterations from seeded positions on a sphere."""
    if not doc_ids:
        raise LayoutError("no documents to lay out")
    topic_of = topic_of or {}
    n = len(doc_ids)
    lengths = np.array([max(1, text_lengths.get(d, 1)) for d in doc_ids], dtype=np.float64)
    radii = SPACE_BASE_RADIUS * np.cbrt(lengths / float(np.median(lengths)))

    if n == 1:
        return [
            SpaceNode(
                document_id=doc_ids[0],
                position=(0.0, 0.0, 0.0),
                radius=float(radii[0]),
                topic_color_index=topic_of.get(doc_ids[0]),
            )
        ]

    pos_index = {d: i for i, d in enumerate(doc_similarities.ids)}
    sims = np.zeros((n, n))
    for i, a in enumerate(doc_ids):
        for j, b in enumerate(doc_ids):
            if i != j and a in pos_index and b in pos_index:
                sims[i, j] = doc_similarities.values[pos_index[a], pos_index[b]]
    attract = np.where(sims > theta, sims, 0.0)

    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n, 3))
    directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), _EPS)
    positions = 0.5 * SPACE_EXTENT * directions

    step_size = 0.1 * SPACE_EXTENT
    for _ in range(SPACE_ITERATIONS):
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        np.fill_diagonal(dist, np.inf)
        # Uniform repulsion (inverse square), identical constant for every pair.
        repulse = np.sum(diff / dist[:, :, None] ** 3, axis=1)
        # Spring attraction toward similar documents, proportional to distance.
        pull = np.sum(attract[:, :, None] * (-diff), axis=1)
        forces = repulse + pull
        norms = np.linalg.norm(forces, axis=1, keepdims=True)
        capped = np.minimum(norms, 1.0)
        forces = np.divide(forces, norms, out=np.zeros_like(forces), where=norms > _EPS) * capped
        positions = positions + step_size * forces
        step_size *= 0.98

    return [
        SpaceNode(
            document_id=d,
            position=(float(x), float(y), float(z)),
            radius=float(r),
            topic_color_index=topic_of.get(d),
        )
        for d, (x, y, z), r in zip(doc_ids, positions, radii)
    ]
