"""Focused sectional profile for a selected entity or entity set.

The profile has three layers: the focused item itself (core), the type
proportions of its entities (donut), and the co-occurring entity sets
arranged on polar axes with per-type heights (mantle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .extraction import EntitySet, EntityType
from .relations import co_occurrence

DEFAULT_AXIS_HEIGHT_UNIT = 6.0
DEFAULT_MANTLE_INNER_RADIUS = 60.0


class FocusError(Exception):
    pass


@dataclass(frozen=True)
class FocusTarget:
    kind: str  # "me" | "mes"
    me: tuple[str, EntityType] | None = None
    mes_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "me":
            if self.me is None or self.mes_id is not None:
                raise FocusError("an entity focus needs 'me' and no 'mes_id'")
        elif self.kind == "mes":
            if self.mes_id is None or self.me is not None:
                raise FocusError("an entity-set focus needs 'mes_id' and no 'me'")
        else:
            raise FocusError(f"unknown focus kind: {self.kind!r}")


@dataclass(frozen=True)
class AssociateAxis:
    entity_set_id: str
    co_occurrence_strength: int
    heights_by_type: dict[EntityType, float]
    entities: tuple[tuple[str, EntityType], ...]  # grouped by class along the axis


@dataclass(frozen=True)
class FocusProfile:
    core_label: str
    kind: str
    donut: tuple[tuple[EntityType, float], ...]
    associates: tuple[AssociateAxis, ...]
    h_t: float


def _focus_entity_keys(target: FocusTarget, scope: Mapping[str, EntitySet]) -> set[tuple[str, EntityType]]:
    if target.kind == "me":
        return {target.me}  # type: ignore[arg-type]
    if target.mes_id not in scope:
        raise FocusError(f"entity set {target.mes_id} is not in the focus scope")
    return scope[target.mes_id].entity_keys()


def collect_associates(target: FocusTarget, scope: Mapping[str, EntitySet]) -> list[str]:
    """Scope sets sharing at least one entity with the focus (the focused set
    itself excluded), ordered by shared-entity count descending then id."""
    if not scope:
        raise FocusError("empty focus scope")
    keys = _focus_entity_keys(target, scope)
    strengths: list[tuple[int, str]] = []
    for set_id in sorted(scope):
        if target.kind == "mes" and set_id == target.mes_id:
            continue
        shared = len(keys & scope[set_id].entity_keys())
        if shared > 0:
            strengths.append((shared, set_id))
    strengths.sort(key=lambda s: (-s[0], s[1]))
    return [set_id for _, set_id in strengths]


def focus_profile(
    target: FocusTarget,
    scope: Mapping[str, EntitySet],
    h_t: float = DEFAULT_AXIS_HEIGHT_UNIT,
) -> FocusProfile:
    """Donut over the focus target's own entities plus the associate axes.

    An entity focus shows exactly one donut slice of proportion 1; axis
    heights are exact integer multiples of ``h_t``.
    """
    if h_t <= 0:
        raise FocusError("h_t must be positive")
    if not scope:
        raise FocusError("empty focus scope")

    if target.kind == "me":
        normalized, etype = target.me  # type: ignore[misc]
        donut: tuple[tuple[EntityType, float], ...] = ((etype, 1.0),)
        core_label = normalized
        focus_set = None
    else:
        focus_set = scope.get(target.mes_id or "")
        if focus_set is None:
            raise FocusError(f"entity set {target.mes_id} is not in the focus scope")
        core_label = focus_set.id
        if focus_set.total > 0:
            donut = tuple(
                (etype, count / focus_set.total)
                for etype, count in sorted(focus_set.counts_by_type.items())
                if count > 0
            )
        else:
            donut = ()

    associates = []
    for set_id in collect_associates(target, scope):
        other = scope[set_id]
        if target.kind == "mes" and focus_set is not None:
            strength = co_occurrence(focus_set, other).strength
        else:
            strength = 1  # the focused entity itself is the shared item
        heights = {
            etype: count * h_t for etype, count in sorted(other.counts_by_type.items()) if count > 0
        }
        entities = tuple(sorted(other.entities, key=lambda e: (int(e[1]), e[0])))
        associates.append(
            AssociateAxis(
                entity_set_id=set_id,
                co_occurrence_strength=strength,
                heights_by_type=heights,
                entities=entities,
            )
        )

    return FocusProfile(
        core_label=core_label,
        kind=target.kind,
        donut=donut,
        associates=tuple(associates),
        h_t=h_t,
    )


@dataclass(frozen=True)
class BandSegment:
    type: EntityType
    axis_a: int
    axis_b: int
    angle_a: float
    angle_b: float
    base_a: float
    top_a: float
    base_b: float
    top_b: float


@dataclass(frozen=True)
class MantleGeometry:
    inner_radius: float
    axes: tuple[tuple[int, float, str], ...]  # (index, angle, entity_set_id)
    bands: tuple[BandSegment, ...]


def mantle_geometry(
    profile: FocusProfile,
    inner_radius: float = DEFAULT_MANTLE_INNER_RADIUS,
) -> MantleGeometry:
    """Polar geometry of the mantle: axes at uniform angles in associate
    order; per-type bands between consecutive axes, with types stacked in
    fixed pole order along every axis."""
    if not profile.associates:
        raise FocusError("mantle needs at least one associate")
    m = len(profile.associates)
    angles = [2.0 * math.pi * i / m for i in range(m)]
    axes = tuple(
        (i, angles[i], profile.associates[i].entity_set_id) for i in range(m)
    )

    # Stack heights in type-code order to get each type's radial base per axis.
    stacked: list[dict[EntityType, tuple[float, float]]] = []
    for axis in profile.associates:
        base = inner_radius
        spans: dict[EntityType, tuple[float, float]] = {}
        for etype in sorted(axis.heights_by_type):
            h = axis.heights_by_type[etype]
            spans[etype] = (base, base + h)
            base += h
        stacked.append(spans)

    bands: list[BandSegment] = []
    all_types = sorted({t for spans in stacked for t in spans})
    for etype in all_types:
        for i in range(m - 1):
            a = stacked[i].get(etype, (inner_radius, inner_radius))
            b = stacked[i + 1].get(etype, (inner_radius, inner_radius))
            if a[1] - a[0] <= 0 and b[1] - b[0] <= 0:
                continue
            bands.append(
                BandSegment(
                    type=etype,
                    axis_a=i,
                    axis_b=i + 1,
                    angle_a=angles[i],
                    angle_b=angles[i + 1],
                    base_a=a[0],
                    top_a=a[1],
                    base_b=b[0],
                    top_b=b[1],
                )
            )
    return MantleGeometry(inner_radius=inner_radius, axes=axes, bands=tuple(bands))
