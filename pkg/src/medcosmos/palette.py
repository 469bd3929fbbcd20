"""Shared color definitions: one color per entity type, plus the
categorical palette used for constellations. Mixing happens in linear RGB.
"""
from __future__ import annotations

# One color per entity type, in pole order (type codes 0..8).
TYPE_COLORS: tuple[str, ...] = (
    "#e41a1c",  # dis
    "#ff7f00",  # sym
    "#4daf4a",  # dru
    "#377eb8",  # equ
    "#984ea3",  # pro
    "#a65628",  # bod
    "#00ced1",  # ite
    "#f781bf",  # mic
    "#999999",  # dep
)

NEUTRAL_GRAY = "#808080"

# Constellation hues (cycled per document within a selection).
CONSTELLATION_COLORS: tuple[str, ...] = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def hex_to_srgb(color: str) -> tuple[float, float, float]:
    color = color.lstrip("#")
    return tuple(int(color[i : i + 2], 16) / 255.0 for i in (0, 2, 4))  # type: ignore[return-value]


def srgb_to_hex(rgb: tuple[float, float, float]) -> str:
    return "#" + "".join(f"{round(max(0.0, min(1.0, c)) * 255):02x}" for c in rgb)


def srgb_to_linear(c: float) -> float:
    if c <= 0.04045:
        return c / 12.92
    return ((c + 0.055) / 1.055) ** 2.4


def linear_to_srgb(c: float) -> float:
    if c <= 0.0031308:
        return c * 12.92
    return 1.055 * c ** (1 / 2.4) - 0.055


def mix_linear(colors: list[str], weights: list[float]) -> str:
    """Weighted average of hex colors computed in linear RGB."""
    total = sum(weights)
    if total <= 0 or not colors:
        return NEUTRAL_GRAY
    mixed = [0.0, 0.0, 0.0]
    for color, w in zip(colors, weights):
        rgb = hex_to_srgb(color)
        for i in range(3):
            mixed[i] += (w / total) * srgb_to_linear(rgb[i])
    return srgb_to_hex(tuple(linear_to_srgb(c) for c in mixed))  # type: ignore[arg-type]
