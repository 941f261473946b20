"""The axis-crossing game behind the golden-ratio lower bound.

A spiralling barrier starts at p0 = (A, 0) and meets the four coordinate
half-axes in counterclockwise order.  Crossing ``i`` records the axis it
lands on, its distance ``p`` from the origin and the barrier length ``x``
built since the previous crossing.  The fire keeps burning on the axis
visited before as long as

    x_0 / v > A                  (first round)
    x_i / v > A + x_{i-1}        (later rounds)

and a schedule is only realisable if A + x_{i-1}/v + x_i/v <= p_{i+1} <= x_i.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, MalformedScheduleError, ParameterOverflowError

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

# relative feasibility slack that absorbs rounding in p = x equality cases
_FEAS_RTOL = 1e-12


@dataclass(frozen=True)
class Crossing:
    axis: int
    p: float
    x: float


@dataclass(frozen=True)
class SpirallingSchedule:
    v: float
    A: float
    crossings: tuple

    def __post_init__(self):
        if not (self.v > 1.0 and math.isfinite(self.v)):
            raise InvalidParameterError(f"speed must exceed 1 (got v={self.v!r})")
        if not (self.A > 0.0 and math.isfinite(self.A)):
            raise InvalidParameterError(f"initial radius must be positive (got A={self.A!r})")
        object.__setattr__(self, "crossings", tuple(self.crossings))

    def scaled(self, factor: float) -> "SpirallingSchedule":
        """All lengths multiplied by ``factor``."""
        return SpirallingSchedule(
            self.v, self.A * factor,
            tuple(Crossing(c.axis, c.p * factor, c.x * factor) for c in self.crossings),
        )

    def to_json(self) -> str:
        doc = {
            "v": self.v, "A": self.A,
            "crossings": [{"axis": c.axis, "p": c.p, "x": c.x} for c in self.crossings],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SpirallingSchedule":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedScheduleError(
                f"schedule is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}"
            ) from exc
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc) -> "SpirallingSchedule":
        if not isinstance(doc, dict):
            raise MalformedScheduleError("schedule must be a JSON object with keys v, A, crossings")
        missing = [k for k in ("v", "A", "crossings") if k not in doc]
        if missing:
            raise MalformedScheduleError(f"schedule lacks key(s): {', '.join(missing)}")
        if not isinstance(doc["crossings"], list):
            raise MalformedScheduleError("'crossings' must be a list")
        out = []
        for n, c in enumerate(doc["crossings"]):
            try:
                out.append(Crossing(int(c["axis"]), float(c["p"]), float(c["x"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedScheduleError(
                    f"crossing {n} must have numeric axis, p and x ({exc})"
                ) from exc
        try:
            return cls(float(doc["v"]), float(doc["A"]), tuple(out))
        except (TypeError, ValueError) as exc:
            raise MalformedScheduleError(f"v and A must be numbers ({exc})") from exc


@dataclass(frozen=True)
class InvariantTrace:
    v: float
    A: float
    alive: np.ndarray  # per round: the length-A interval is still burning
    slack: np.ndarray

    @property
    def all_alive(self) -> bool:
        return bool(np.all(self.alive))

    def first_failure(self):
        bad = np.nonzero(~self.alive)[0]
        return int(bad[0]) if bad.size else None

    def as_dict(self) -> dict:
        return {
            "v": self.v,
            "A": self.A,
            "rounds": int(self.alive.size),
            "alive": self.all_alive,
            "first_failure": self.first_failure(),
            "trace": [
                {"round": i, "fire_interval_alive": bool(a), "slack": float(s)}
                for i, (a, s) in enumerate(zip(self.alive, self.slack))
            ],
        }


def _validate(schedule: SpirallingSchedule) -> None:
    cs = schedule.crossings
    if not cs:
        raise MalformedScheduleError("schedule has no crossings")
    prev_axis = 0
    last_on_axis = {0: schedule.A}
    for i, c in enumerate(cs):
        if not (c.p > 0.0 and c.x > 0.0 and math.isfinite(c.p) and math.isfinite(c.x)):
            raise MalformedScheduleError(f"crossing {i}: p and x must be positive and finite")
        if c.axis not in (0, 1, 2, 3):
            raise MalformedScheduleError(f"crossing {i}: axis must be in 0..3 (got {c.axis})")
        if c.axis != (prev_axis + 1) % 4:
            raise MalformedScheduleError(
                f"crossing {i}: axis {c.axis} does not follow axis {prev_axis} counterclockwise"
            )
        if c.axis in last_on_axis and not c.p > last_on_axis[c.axis]:
            raise MalformedScheduleError(
                f"crossing {i}: distance {c.p!r} does not exceed the previous visit "
                f"{last_on_axis[c.axis]!r} on axis {c.axis}"
            )
        last_on_axis[c.axis] = c.p
        prev_axis = c.axis


def check_schedule(schedule: SpirallingSchedule, rtol: float = _FEAS_RTOL) -> InvariantTrace:
    """Replay the induction of the lower-bound argument on a schedule.

    Raises :class:`MalformedScheduleError` when the type invariants fail or a
    crossing cannot be realised (the barrier is too short to reach the axis
    point, or the fire gets there first).  ``rtol`` is the relative slack
    granted to the realisability bounds, e.g. for crossings measured on a
    polyline.
    """
    _validate(schedule)
    v, A = schedule.v, schedule.A
    xs = [float(c.x) for c in schedule.crossings]
    ps = [float(c.p) for c in schedule.crossings]
    n = len(xs)
    slack = np.empty(n)
    for i in range(n):
        prev = xs[i - 1] if i > 0 else 0.0
        lower = A + prev / v + xs[i] / v
        tol = rtol * max(lower, xs[i])
        if ps[i] > xs[i] + tol:
            raise MalformedScheduleError(
                f"round {i}: barrier of length {xs[i]!r} cannot reach distance {ps[i]!r}"
            )
        if ps[i] < lower - tol:
            raise MalformedScheduleError(
                f"round {i}: the fire reaches distance {ps[i]!r} before the barrier "
                f"(needs at least {lower!r}); x must be at least "
                f"{v * (A + prev / v) / (v - 1.0)!r}"
            )
        slack[i] = xs[i] / v - (A + prev)
    return InvariantTrace(v, A, slack > 0.0, slack)


def minimal_growth_schedule(v: float, A: float, rounds: int) -> SpirallingSchedule:
    """Schedule with every feasibility constraint tight.

    x_0 = vA/(v-1) and x_{i+1} = vA/(v-1) + x_i/(v-1); each crossing sits at
    distance p = x.
    """
    v = float(v)
    if not (v > 1.0 and math.isfinite(v)):
        raise InvalidParameterError(f"speed must exceed 1 (got v={v!r})")
    if not A > 0.0:
        raise InvalidParameterError(f"initial radius must be positive (got A={A!r})")
    if int(rounds) != rounds or rounds < 1:
        raise InvalidParameterError(f"rounds must be >= 1 (got {rounds!r})")
    base = v * A / (v - 1.0)
    x = base
    out = []
    for i in range(int(rounds)):
        if i > 0:
            x = base + x / (v - 1.0)
        if not math.isfinite(x):
            raise ParameterOverflowError(
                f"barrier length overflows at round {i}; use fewer rounds"
            )
        out.append(Crossing((i + 1) % 4, x, x))
    return SpirallingSchedule(v, float(A), tuple(out))


def _tightness(v: float) -> float:
    """(1 + v - v^2) / (v (v - 1)), snapped to 0 at the golden ratio."""
    num = 1.0 + v - v * v
    if abs(num) <= 8 * np.finfo(float).eps * v * v:
        num = 0.0
    return num / (v * (v - 1.0))


def minimal_relative_slack(v: float, rounds: int) -> np.ndarray:
    """Per-round slack of the minimal schedule divided by (A + x_{i-1}).

    Uses the scale-free recurrence on y = A/x so that thousands of rounds
    stay in range; the sign equals the sign of the absolute slack.
    """
    v = float(v)
    b = _tightness(v)
    out = np.empty(int(rounds))
    # round 0: x0/v - A over A
    out[0] = 1.0 / (v - 1.0) - 1.0
    y = (v - 1.0) / v  # A / x_0
    for i in range(1, int(rounds)):
        # slack_i = A (1/(v-1) - 1) + b x_{i-1}; divide by A + x_{i-1}
        out[i] = ((1.0 / (v - 1.0) - 1.0) * y + b) / (y + 1.0)
        y = (v - 1.0) * y / (v * y + 1.0)
    return out


def golden_ratio_certificate(v: float, A: float, rounds: int) -> bool:
    """True iff the minimal schedule keeps the fire alive for all ``rounds``.

    Only defined for 1 < v <= golden ratio.
    """
    v = float(v)
    if not v > 1.0:
        raise InvalidParameterError(f"speed must exceed 1 (got v={v!r})")
    if v > GOLDEN_RATIO:
        raise InvalidParameterError(
            f"the certificate only applies up to the golden ratio {GOLDEN_RATIO!r} (got v={v!r})"
        )
    if not A > 0.0:
        raise InvalidParameterError(f"initial radius must be positive (got A={A!r})")
    if int(rounds) != rounds or rounds < 1:
        raise InvalidParameterError(f"rounds must be >= 1 (got {rounds!r})")
    return bool(np.all(minimal_relative_slack(v, rounds) > 0.0))


def first_failing_round(v: float, max_rounds: int = 10_000):
    """First round where the minimal schedule lets the fire interval die, or None."""
    rel = minimal_relative_slack(v, max_rounds)
    bad = np.nonzero(rel <= 0.0)[0]
    return int(bad[0]) if bad.size else None


def schedule_from_curve(curve) -> SpirallingSchedule:
    """Axis crossings of a simulated barrier curve, in order."""
    pts = curve.points
    S = curve.arc_length
    n = len(curve)
    axis_dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    out = []
    last_arc = 0.0
    axis = 1
    i = 1
    while i < n and len(out) < 10**6:
        # crossing of the half-axis ``axis`` in counterclockwise direction
        d = axis_dirs[axis]
        normal = np.array([-d[1], d[0]])
        side = pts[i:] @ normal
        along = pts[i:] @ d
        prev_side = pts[i - 1:-1] @ normal
        hit = np.nonzero((prev_side < 0.0) & (side >= 0.0) & (along > 0.0))[0]
        if hit.size == 0:
            break
        k = i + int(hit[0])
        a, b = pts[k - 1] @ normal, pts[k] @ normal
        t = a / (a - b)
        point = pts[k - 1] + t * (pts[k] - pts[k - 1])
        arc = S[k - 1] + t * (S[k] - S[k - 1])
        out.append(Crossing(axis, float(point @ d), float(arc - last_arc)))
        last_arc = arc
        axis = (axis + 1) % 4
        i = k + 1
    return SpirallingSchedule(curve.params.v, curve.params.A, tuple(out))
