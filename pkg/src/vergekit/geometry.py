"""Closed-form relations between fixation distance, vergence angle,
stereoscopic disparity, and effective focal length.

The vergence angle is the angle between the two eyes' lines of sight when
both fixate a point at a given distance. For an interpupillary distance
``ipd`` and a fixation distance ``D`` straight ahead,

    theta = 2 * atan((ipd / 2) / D)

Depth-switching gestures are labelled by their start and end depth levels;
their signed angular change is the quantity the EOG amplitude tracks.
Everything here is a pure function, safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class EyeConfig:
    """Viewer geometry. ipd_mm is the interpupillary distance in
    millimetres; adult values run roughly 50 to 75 mm and 50 is the
    default used throughout."""

    ipd_mm: float = 50.0

    def __post_init__(self):
        if not self.ipd_mm > 0:
            raise ValueError(f"ipd_mm must be positive, got {self.ipd_mm}")


@dataclass(frozen=True)
class DepthLevel:
    """A named fixation depth. Distances are in centimetres."""

    name: str
    distance_cm: float

    def __post_init__(self):
        if not self.distance_cm > 0:
            raise ValueError(f"distance_cm must be positive, got {self.distance_cm}")


NEAR = DepthLevel("Near", 30.0)
MID = DepthLevel("Mid", 70.0)
FAR = DepthLevel("Far", 200.0)


@dataclass(frozen=True)
class GestureLabel:
    """A depth transition gesture: shift fixation from one depth level to
    another. Convergence means the target is nearer than the start."""

    from_depth: DepthLevel
    to_depth: DepthLevel

    def __post_init__(self):
        if self.from_depth == self.to_depth:
            raise ValueError("gesture must change depth level")

    @property
    def is_convergence(self) -> bool:
        return self.to_depth.distance_cm < self.from_depth.distance_cm

    def reverse(self) -> "GestureLabel":
        return GestureLabel(self.to_depth, self.from_depth)

    @property
    def key(self) -> str:
        """Canonical string form, e.g. '200to30'."""
        return f"{_fmt_cm(self.from_depth.distance_cm)}to{_fmt_cm(self.to_depth.distance_cm)}"

    def __str__(self) -> str:
        return self.key


def _fmt_cm(cm: float) -> str:
    return str(int(cm)) if float(cm).is_integer() else repr(float(cm))


_LEVELS = (NEAR, MID, FAR)


def six_labels(levels: tuple[DepthLevel, ...] = _LEVELS) -> list[GestureLabel]:
    """All ordered depth transitions among the given levels, sorted by
    (start distance, end distance). This ordering defines the canonical
    label index used for deterministic tie-breaking in classifiers."""
    out = [
        GestureLabel(a, b)
        for a in levels
        for b in levels
        if a != b
    ]
    out.sort(key=lambda g: (g.from_depth.distance_cm, g.to_depth.distance_cm))
    return out


def four_labels(levels: tuple[DepthLevel, ...] = _LEVELS) -> list[GestureLabel]:
    """The high-separability subset: the transitions whose endpoints include
    the farthest level (30to200, 70to200, 200to30, 200to70 at defaults)."""
    far = max(levels, key=lambda lv: lv.distance_cm)
    return [g for g in six_labels(levels) if far in (g.from_depth, g.to_depth)]


def label_from_key(key: str, levels: tuple[DepthLevel, ...] = _LEVELS) -> GestureLabel:
    """Inverse of GestureLabel.key. Raises ValueError on unknown keys."""
    for g in six_labels(levels):
        if g.key == key:
            return g
    raise ValueError(f"unknown gesture label {key!r}")


def vergence_angle(cfg: EyeConfig, distance_cm: float) -> float:
    """Vergence angle in degrees at a fixation distance given in cm.

    Strictly decreasing in distance; approaches zero at infinite fixation.
    At the default 50 mm IPD the three standard depths 30/70/200 cm give
    about 9.5, 4.1 and 1.4 degrees.
    """
    if not distance_cm > 0:
        raise ValueError(f"distance_cm must be positive, got {distance_cm}")
    half_ipd_cm = cfg.ipd_mm / 10.0 / 2.0
    return math.degrees(2.0 * math.atan(half_ipd_cm / distance_cm))


def angle_delta(cfg: EyeConfig, label: GestureLabel) -> float:
    """Signed vergence-angle change of a gesture, in degrees.

    Positive for convergence (shift toward a nearer depth), negative for
    divergence, and antisymmetric: delta(g) == -delta(g.reverse()).
    """
    return vergence_angle(cfg, label.to_depth.distance_cm) - vergence_angle(
        cfg, label.from_depth.distance_cm
    )


def stereo_disparity(screen_dist_cm: float, ipd_cm: float, virtual_depth_cm: float) -> float:
    """Horizontal separation D of the left/right images that places a
    virtual object at depth e when viewing a screen at distance L:

        D = d * (L / e - 1)

    Zero when the object sits on the screen plane, positive when nearer.
    """
    if not screen_dist_cm > 0:
        raise ValueError(f"screen_dist_cm must be positive, got {screen_dist_cm}")
    if not ipd_cm > 0:
        raise ValueError(f"ipd_cm must be positive, got {ipd_cm}")
    if not virtual_depth_cm > 0:
        raise ValueError(f"virtual_depth_cm must be positive, got {virtual_depth_cm}")
    return ipd_cm * (screen_dist_cm / virtual_depth_cm - 1.0)


def effective_focal_length(d_cm: float, d_prime_cm: float) -> float:
    """Thin-lens effective focal length f = d*d' / (d + d').

    Symmetric in its arguments and always below min(d, d'); satisfies
    1/f = 1/d + 1/d'.
    """
    if not d_cm > 0:
        raise ValueError(f"d_cm must be positive, got {d_cm}")
    if not d_prime_cm > 0:
        raise ValueError(f"d_prime_cm must be positive, got {d_prime_cm}")
    return d_cm * d_prime_cm / (d_cm + d_prime_cm)
