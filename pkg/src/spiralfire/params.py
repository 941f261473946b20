"""Scalar model parameters derived from the fighter speed.

Everything downstream is a function of the excentricity angle
``alpha = arccos(1/v)`` and the initial fire radius ``A``.  The four
coefficients of the generating function are exposed as ``vcoef``, ``r``,
``w`` and ``s``::

    F(Z) / F_0 = (exp(vcoef Z) - r Z) / (exp(w Z) - s Z)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import InvalidParameterError, ParameterOverflowError

TWO_PI = 2.0 * math.pi

#: Below this speed ``cot(alpha)`` is so large that ``s`` and ``l1`` overflow.
MIN_SPEED = 1.0 + 1e-6


@dataclass(frozen=True)
class ModelParams:
    v: float
    A: float
    alpha: float
    vcoef: float
    r: float
    w: float
    s: float
    q: float
    l1: float
    l2: float
    F0_l1: float
    phi0_l1: float
    phi0_l2: float

    @property
    def cos_alpha(self) -> float:
        return math.cos(self.alpha)

    @property
    def sin_alpha(self) -> float:
        return math.sin(self.alpha)

    @property
    def cot_alpha(self) -> float:
        return math.cos(self.alpha) / math.sin(self.alpha)

    def as_dict(self) -> dict:
        return asdict(self)


def _build(v: float, A: float, alpha: float) -> ModelParams:
    sin_a = math.sin(alpha)
    cos_a = math.cos(alpha)
    cot_a = cos_a / sin_a
    try:
        e_turn = math.exp(TWO_PI * cot_a)
        r = math.exp(alpha * cot_a)
        s = math.exp((TWO_PI + alpha) * cot_a)
    except OverflowError as exc:
        raise ParameterOverflowError(
            f"parameters overflow for alpha={alpha!r} (speed too close to 1)"
        ) from exc
    vcoef = alpha / sin_a
    w = (TWO_PI + alpha) / sin_a
    # l1 = A (e^{2 pi cot} - 1) / cos(alpha); expm1 keeps it accurate as
    # alpha -> pi/2, and the limit 2 pi A / sin(alpha) is used at the end point.
    if cos_a > 0.0:
        l1 = A * math.expm1(TWO_PI * cot_a) / cos_a
    else:
        l1 = A * TWO_PI / sin_a
    l2 = l1 * r
    fields = dict(
        v=v,
        A=A,
        alpha=alpha,
        vcoef=vcoef,
        r=r,
        w=w,
        s=s,
        q=s / w,
        l1=l1,
        l2=l2,
        F0_l1=A * e_turn,
        phi0_l1=cos_a * l1,
        phi0_l2=cos_a * l2,
    )
    for name, value in fields.items():
        if name != "v" and not math.isfinite(value):
            raise ParameterOverflowError(f"{name} is not finite for alpha={alpha!r}")
    return ModelParams(**fields)


def derive_params(v: float, A: float = 1.0) -> ModelParams:
    """Return all model parameters for fighter speed ``v`` and fire radius ``A``.

    Raises :class:`InvalidParameterError` for ``v <= 1`` or ``A <= 0`` and
    :class:`ParameterOverflowError` when ``v`` is so close to 1 that the
    closed forms leave the double range.
    """
    v = float(v)
    A = float(A)
    if not math.isfinite(v) or v <= 1.0:
        raise InvalidParameterError(f"speed must exceed 1 (got v={v!r})")
    if not math.isfinite(A) or A <= 0.0:
        raise InvalidParameterError(f"initial radius must be positive (got A={A!r})")
    if v < MIN_SPEED:
        raise ParameterOverflowError(f"speed v={v!r} is too close to 1 to represent")
    return _build(v, A, math.acos(1.0 / v))


def params_from_alpha(alpha: float, A: float = 1.0) -> ModelParams:
    """Build parameters directly from the angle; ``alpha = pi/2`` means ``v = inf``."""
    alpha = float(alpha)
    if not (0.0 < alpha <= math.pi / 2):
        raise InvalidParameterError(f"alpha must lie in (0, pi/2] (got {alpha!r})")
    if A <= 0.0:
        raise InvalidParameterError(f"initial radius must be positive (got A={A!r})")
    cos_a = math.cos(alpha)
    v = 1.0 / cos_a if alpha < math.pi / 2 else math.inf
    return _build(v, float(A), alpha)


def slope_q(alpha: float) -> float:
    """``s/w`` as a function of alpha; strictly decreasing on (0, pi/2)."""
    sin_a = math.sin(alpha)
    return math.exp((TWO_PI + alpha) * math.cos(alpha) / sin_a) * sin_a / (TWO_PI + alpha)


def _dlog_q(alpha: float) -> float:
    # d/dalpha of log(s/w)
    sin_a = math.sin(alpha)
    cot_a = math.cos(alpha) / sin_a
    return cot_a - (TWO_PI + alpha) / sin_a**2 + cot_a - 1.0 / (TWO_PI + alpha)


def critical_angle_and_speed() -> tuple[float, float]:
    """Angle and speed at which ``s/w = e``.

    Bisection on ``log(s/w) - 1`` to a 1e-13 bracket followed by one Newton
    step with the analytic derivative.
    """
    f = lambda a: math.log(slope_q(a)) - 1.0
    lo, hi = 0.5, 1.5
    assert f(lo) > 0.0 > f(hi), "critical angle bracket is invalid"
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    alpha_c = 0.5 * (lo + hi)
    alpha_c -= f(alpha_c) / _dlog_q(alpha_c)
    return alpha_c, 1.0 / math.cos(alpha_c)
