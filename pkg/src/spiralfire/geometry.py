"""Polyline simulation of the barrier curve and its geometric checks.

The curve starts at p0 = (A, 0).  Two closed-form logarithmic spiral
segments (about the origin up to p1, then about p0 up to p2) are sampled
exactly; afterwards the free string is wrapped around the previous coil
and the curve advances along the string direction turned by alpha.

Free-string convention: up to p1 the stored value is the distance to the
origin, on [p1, p2] the distance to p0, and afterwards the length of the
tangent to the previous coil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _wrapkernel as K
from .errors import (
    InvalidParameterError,
    StepTooCoarseError,
    TangentConstructionError,
)
from .params import ModelParams

STOP_REASONS = {
    K.STATUS_CLOSED: "closed",
    K.STATUS_MAX_ROUNDS: "max_rounds",
    K.STATUS_DIVERGED: "diverged",
}

DEFAULT_MAX_POINTS = 20_000_000


@dataclass(frozen=True)
class Mark:
    """A linkage round mark: M marks carry F_j(l1), N marks phi_j(l2)."""

    kind: str
    j: int
    arc: float
    value: float
    position: float  # fractional sample index


@dataclass(frozen=True)
class BarrierPolyline:
    params: ModelParams
    points: np.ndarray
    arc_length: np.ndarray
    free_string: np.ndarray
    support_arc: np.ndarray
    tangents: np.ndarray
    round_marks: np.ndarray
    marks: tuple
    closed: bool
    step: float
    relative: bool
    stop_reason: str
    p1_index: int
    p2_index: int

    def __len__(self):
        return self.points.shape[0]

    @property
    def containment_round(self) -> Optional[int]:
        """Number of completed F rounds when the curve closed, else None."""
        if not self.closed:
            return None
        return sum(1 for m in self.marks if m.kind == "M")

    @property
    def rounds(self) -> int:
        """Index of the last recorded M mark."""
        return max(m.j for m in self.marks if m.kind == "M")

    def to_csv_rows(self):
        for i in range(len(self)):
            yield (i, self.points[i, 0], self.points[i, 1], self.arc_length[i], self.free_string[i])


@dataclass(frozen=True)
class RoundValues:
    F: np.ndarray
    phi: np.ndarray

    def __iter__(self):
        return iter(self.F)

    def __len__(self):
        return self.F.size

    def __getitem__(self, j):
        return self.F[j]


@dataclass(frozen=True)
class Linkage:
    edges: tuple  # ((x0, y0), (x1, y1)) from the innermost edge outward
    linkage_type: str  # "F" or "phi"

    def __len__(self):
        return len(self.edges)

    def directions(self) -> np.ndarray:
        e = np.asarray(self.edges, dtype=float)
        d = e[:, 1, :] - e[:, 0, :]
        return np.arctan2(d[:, 1], d[:, 0])


# -- bootstrap -------------------------------------------------------------

def _bootstrap(params: ModelParams, h: float):
    """Exact samples of both spiral segments on the grid k*h, k = 0..n2."""
    p = params
    ca, sa = p.cos_alpha, p.sin_alpha
    n2 = int(round(p.l2 / h))
    arcs = h * np.arange(n2 + 1)
    arcs[-1] = p.l2
    pts = np.empty((n2 + 1, 2))
    fs = np.empty(n2 + 1)
    ang = np.empty(n2 + 1)
    tan_a = sa / ca if ca > 0 else math.inf

    first = arcs <= p.l1
    d = p.A + ca * arcs[first]
    theta = np.log(d / p.A) * tan_a if ca > 0 else arcs[first] / p.A
    pts[first, 0] = d * np.cos(theta)
    pts[first, 1] = d * np.sin(theta)
    fs[first] = d
    ang[first] = theta + p.alpha

    second = ~first
    base = ca * p.l1
    d2 = ca * arcs[second]
    if ca > 0:
        theta2 = np.log(d2 / base) * tan_a
    else:
        d2 = np.full(d2.shape, p.A * 2 * math.pi)
        theta2 = (arcs[second] - p.l1) / d2
    pts[second, 0] = p.A + d2 * np.cos(theta2)
    pts[second, 1] = d2 * np.sin(theta2)
    fs[second] = d2
    ang[second] = theta2 + p.alpha
    tangents = np.column_stack([np.cos(ang), np.sin(ang)])
    return arcs, pts, fs, tangents, n2


def _xray_crossings(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    idx = np.nonzero((y[:-1] < 0.0) & (y[1:] >= 0.0) & (x[1:] > 0.0))[0] + 1
    return idx


def build_curve(
    params: ModelParams,
    ds: float,
    max_rounds: int,
    relative: bool = False,
    max_points: int = DEFAULT_MAX_POINTS,
    max_turn: float = K.MAX_TURN,
) -> BarrierPolyline:
    """Simulate the barrier until it closes, diverges or finishes ``max_rounds``.

    With ``relative=True`` each wrapping step is ``ds * max(1, |p|/A)``,
    which keeps the per-coil sample count bounded on fast-growing curves.
    The grid step is shrunk slightly so that p2 falls on a sample.  A step
    that turns the string by more than ``max_turn`` radians raises
    :class:`StepTooCoarseError`.
    """
    p = params
    if not (ds > 0.0) or ds > p.A / 100.0 * (1 + 1e-12):
        raise InvalidParameterError(f"ds must lie in (0, A/100] (got ds={ds!r})")
    if int(max_rounds) != max_rounds or max_rounds < 1:
        raise InvalidParameterError(f"max_rounds must be >= 1 (got {max_rounds!r})")
    max_rounds = int(max_rounds)
    n_boot = math.ceil(p.l2 / ds - 1e-9)
    if n_boot + 1 > max_points:
        raise InvalidParameterError(
            f"the two spiral segments alone need {n_boot + 1} samples (limit {max_points}); increase ds"
        )
    h = p.l2 / n_boot
    arcs, pts, fs, tang, n2 = _bootstrap(p, h)

    cap = max(min(4 * (n2 + 1), max_points), n2 + 1)
    X = np.empty(cap)
    Y = np.empty(cap)
    S = np.empty(cap)
    FS = np.empty(cap)
    TX = np.empty(cap)
    TY = np.empty(cap)
    SUP = np.full(cap, np.nan)
    X[: n2 + 1] = pts[:, 0]
    Y[: n2 + 1] = pts[:, 1]
    S[: n2 + 1] = arcs
    FS[: n2 + 1] = fs
    TX[: n2 + 1] = tang[:, 0]
    TY[: n2 + 1] = tang[:, 1]
    SUP[n2] = 0.0  # the string at p2 is attached to p0

    max_marks = 2 * max_rounds + 1
    marks = np.zeros((max_marks + 2, 3))
    marks[0] = (p.l1, p.F0_l1, p.l1 / h)
    marks[1] = (p.l2, p.phi0_l2, float(n2))
    state = np.array([float(n2), 0.0, 2.0, 0.0])

    while True:
        status = K.wrap(
            X, Y, S, FS, TX, TY, SUP, state, marks,
            p.cos_alpha, p.sin_alpha, h, bool(relative), p.A, max_marks, float(max_turn),
        )
        if status == K.STATUS_TOO_COARSE:
            raise StepTooCoarseError(
                f"string direction turned more than {max_turn} rad in one step "
                f"at arc length {S[int(state[0])]:.6g}; reduce ds"
            )
        if status != K.STATUS_BUFFER_FULL:
            break
        if cap >= max_points:
            status = -1
            break
        new_cap = min(2 * cap, max_points)
        X, Y, S, FS, TX, TY = (np.resize(a, new_cap) for a in (X, Y, S, FS, TX, TY))
        SUP = np.concatenate([SUP, np.full(new_cap - cap, np.nan)])
        cap = new_cap

    n = int(state[0]) + 1
    points = np.column_stack([X[:n], Y[:n]])
    n_marks = int(state[2])
    mark_list = []
    for m in range(n_marks):
        kind = "M" if m % 2 == 0 else "N"
        mark_list.append(Mark(kind, m // 2, float(marks[m, 0]), float(marks[m, 1]), float(marks[m, 2])))
    p1_index = int(round(p.l1 / h))
    crossings = _xray_crossings(points)
    round_marks = np.unique(np.concatenate([crossings, [p1_index, n2]])).astype(np.int64)
    return BarrierPolyline(
        params=p,
        points=points,
        arc_length=S[:n].copy(),
        free_string=FS[:n].copy(),
        support_arc=SUP[:n].copy(),
        tangents=np.column_stack([TX[:n], TY[:n]]),
        round_marks=round_marks,
        marks=tuple(mark_list),
        closed=status == K.STATUS_CLOSED,
        step=h,
        relative=bool(relative),
        stop_reason=STOP_REASONS.get(status, "budget"),
        p1_index=p1_index,
        p2_index=n2,
    )


def measure_free_string_at_rounds(curve: BarrierPolyline) -> RoundValues:
    """Free-string lengths at the linkage round marks.

    ``F[j]`` is the geometric F_j(l1) and ``phi[j]`` the geometric phi_j(l2).
    """
    F = [m.value for m in curve.marks if m.kind == "M"]
    phi = [m.value for m in curve.marks if m.kind == "N"]
    return RoundValues(np.asarray(F), np.asarray(phi))


# -- linkages --------------------------------------------------------------

def _interp_point(curve: BarrierPolyline, sigma: float) -> np.ndarray:
    S = curve.arc_length
    return np.array([np.interp(sigma, S, curve.points[:, 0]), np.interp(sigma, S, curve.points[:, 1])])


def build_linkage(curve: BarrierPolyline, sample_index: int) -> Linkage:
    """Backward tangents from a sample beyond p2 down to 0 or p0."""
    p = curve.params
    n = len(curve)
    if not (curve.p2_index < sample_index < n):
        raise InvalidParameterError(
            f"sample index must lie beyond p2 (index {curve.p2_index}); got {sample_index}"
        )
    S = curve.arc_length
    sigma = float(S[sample_index])
    outer = curve.points[sample_index].copy()
    sup = float(curve.support_arc[sample_index])
    edges = []
    for _ in range(100_000):
        if not math.isfinite(sup) or sup >= sigma or sup < 0.0:
            raise TangentConstructionError(
                f"backward tangent from arc {sigma:.6g} has no support on the inner coil"
            )
        inner = _interp_point(curve, sup)
        edges.append((tuple(inner), tuple(outer)))
        if sup <= p.l1:
            edges.append(((0.0, 0.0), tuple(inner)))
            kind = "F"
            break
        if sup <= p.l2:
            edges.append(((p.A, 0.0), tuple(inner)))
            kind = "phi"
            break
        sigma, outer = sup, inner
        sup = float(np.interp(sup, S, curve.support_arc))
    else:
        raise TangentConstructionError("backward tangent chain does not terminate")
    edges.reverse()
    return Linkage(tuple(edges), kind)


def linkage_type_at(curve: BarrierPolyline, sample_index: int) -> str:
    return build_linkage(curve, sample_index).linkage_type


# -- structure checks ------------------------------------------------------

def circumradius(a, b, c) -> float:
    """Radius of the circle through three points (inf if collinear)."""
    a, b, c = (np.asarray(t, dtype=float) for t in (a, b, c))
    ab = np.linalg.norm(b - a)
    bc = np.linalg.norm(c - b)
    ca = np.linalg.norm(a - c)
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if cross == 0.0:
        return math.inf
    return ab * bc * ca / (2.0 * abs(cross))


def turned_normal_intersection(point_t, tangent_t, point_s, tangent_s, alpha: float) -> float:
    """Distance from t to the meeting point of the normals at t and s turned by pi/2 - alpha."""
    def direction(tangent):
        tx, ty = tangent
        nx, ny = -ty, tx
        rot = math.pi / 2 - alpha
        return np.array([nx * math.cos(rot) - ny * math.sin(rot), nx * math.sin(rot) + ny * math.cos(rot)])

    pt = np.asarray(point_t, dtype=float)
    ps = np.asarray(point_s, dtype=float)
    dt, dsv = direction(tangent_t), direction(tangent_s)
    m = np.column_stack([dt, -dsv])
    lam = np.linalg.solve(m, ps - pt)
    return float(abs(lam[0]))


@dataclass(frozen=True)
class StructureReport:
    grow: float
    links: float
    wrap: float
    samples: int
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> dict:
        return {name: getattr(self, name) < tol for name, tol in self.tolerances.items()}

    def as_dict(self) -> dict:
        return {
            "grow": self.grow, "links": self.links, "wrap": self.wrap,
            "samples": self.samples, "tolerances": dict(self.tolerances),
            "passed": self.passed,
        }


DEFAULT_TOLERANCES = {"grow": 1e-3, "links": 1e-2, "wrap": 1e-2}


def validate_structure(curve: BarrierPolyline, min_string: float = 1.0, tolerances=None) -> StructureReport:
    """Maximum residuals of the grow, links and wrap relations along the wrapped part.

    Samples whose string is shorter than ``min_string * A`` (the singular
    approach to closure) and stencils whose support straddles p1, where the
    inner free string jumps by A, are left out.
    """
    p = curve.params
    tol = dict(DEFAULT_TOLERANCES if tolerances is None else tolerances)
    S, F, SUP = curve.arc_length, curve.free_string, curve.support_arc
    pts = curve.points
    i = np.arange(curve.p2_index + 1, len(curve) - 2)
    if i.size == 0:
        raise InvalidParameterError("curve has no wrapped samples to validate")
    grow = np.abs(SUP[i] + F[i] - p.cos_alpha * S[i]) / S[i]

    keep = F[i] >= min_string * p.A
    lo, hi = SUP[i - 1], SUP[i + 1]
    h = curve.step
    keep &= ~((lo <= p.l1 + 2 * h) & (hi >= p.l1 - 2 * h))
    keep &= lo > 2 * h  # the support must have left the corner at p0
    i = i[keep]
    if i.size == 0:
        raise InvalidParameterError("no admissible stencils for the links/wrap check")
    rate = (SUP[i + 1] - SUP[i - 1]) / (S[i + 1] - S[i - 1])
    F_inner = np.interp(SUP[i], S, F)
    # on the first coil the inner free string is the exact spiral radius, which is
    # discontinuous at p1; pick the side the support lies on
    links = np.abs(rate - F_inner / F[i])

    m = np.searchsorted(S, SUP[i])
    m = np.clip(m, 1, len(curve) - 2)
    r_osc = np.array([circumradius(pts[k - 1], pts[k], pts[k + 1]) for k in m])
    wrap_pred = p.sin_alpha * r_osc / F[i]
    wrap = np.abs(rate - wrap_pred) / wrap_pred
    return StructureReport(
        grow=float(grow.max()), links=float(links.max()), wrap=float(wrap.max()),
        samples=int(i.size), tolerances=tol,
    )


def spiral_ray_radii(curve: BarrierPolyline, angle: float) -> np.ndarray:
    """Distances from 0 at which the polyline crosses the ray at ``angle``."""
    c, s = math.cos(angle), math.sin(angle)
    pts = curve.points
    # rotate so the ray is the positive x-axis
    x = pts[:, 0] * c + pts[:, 1] * s
    y = -pts[:, 0] * s + pts[:, 1] * c
    a, b = y[:-1], y[1:]
    idx = np.nonzero(((a < 0.0) & (b >= 0.0)) | ((a > 0.0) & (b <= 0.0)))[0]
    t = a[idx] / (a[idx] - b[idx])
    xc = x[idx] + t * (x[idx + 1] - x[idx])
    return xc[xc > 0.0]


# -- export ----------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def export_svg(curve: BarrierPolyline, options: Optional[dict] = None) -> str:
    """Deterministic SVG 1.1 drawing of the barrier.

    Options: ``marks`` (bool) draws the round marks, ``linkage`` (sample
    index) overlays a linkage, ``width`` sets the pixel width (default 800).
    """
    if len(curve) == 0:
        raise InvalidParameterError("cannot draw an empty curve")
    options = dict(options or {})
    p = curve.params
    pts = curve.points
    xmin = min(pts[:, 0].min(), -p.A)
    xmax = max(pts[:, 0].max(), p.A)
    ymin = min(pts[:, 1].min(), -p.A)
    ymax = max(pts[:, 1].max(), p.A)
    pad = 0.05 * max(xmax - xmin, ymax - ymin)
    xmin, xmax, ymin, ymax = xmin - pad, xmax + pad, ymin - pad, ymax + pad
    width = int(options.get("width", 800))
    height = int(round(width * (ymax - ymin) / (xmax - xmin)))
    stroke = (xmax - xmin) / width

    # y is flipped so that counterclockwise reads as counterclockwise
    def xy(x, y):
        return f"{_fmt(x)},{_fmt(-y)}"

    stride = max(1, len(curve) // 20000)
    keep = np.arange(0, len(curve), stride)
    if keep[-1] != len(curve) - 1:
        keep = np.append(keep, len(curve) - 1)
    path = "M" + " L".join(xy(pts[k, 0], pts[k, 1]) for k in keep)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="{_fmt(xmin)} {_fmt(-ymax)} {_fmt(xmax - xmin)} {_fmt(ymax - ymin)}">',
        f'<circle cx="0.000000" cy="0.000000" r="{_fmt(p.A)}" fill="#f4a460" stroke="none"/>',
        f'<path d="{path}" fill="none" stroke="#000000" stroke-width="{_fmt(stroke)}"/>',
    ]
    if options.get("marks"):
        for m in curve.marks:
            k = m.position
            x = float(np.interp(k, np.arange(len(curve)), pts[:, 0]))
            y = float(np.interp(k, np.arange(len(curve)), pts[:, 1]))
            color = "#c00000" if m.kind == "M" else "#0000c0"
            out.append(
                f'<rect x="{_fmt(x - 2 * stroke)}" y="{_fmt(-y - 2 * stroke)}" '
                f'width="{_fmt(4 * stroke)}" height="{_fmt(4 * stroke)}" fill="{color}"/>'
            )
    if options.get("linkage") is not None:
        link = build_linkage(curve, int(options["linkage"]))
        for (a, b) in link.edges:
            out.append(
                f'<line x1="{_fmt(a[0])}" y1="{_fmt(-a[1])}" x2="{_fmt(b[0])}" y2="{_fmt(-b[1])}" '
                f'stroke="#008000" stroke-width="{_fmt(stroke)}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
