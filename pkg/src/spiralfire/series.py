"""Round-end free-string lengths F_j(l1) and phi_j(l2).

Two independent engines compute the same numbers:

* ``coefficients_by_convolution`` runs the two interleaved convolutions that
  carry the free string from one round to the next;
* ``coefficients_by_division`` expands the generating function
  ``(e^{vcoef Z} - r Z) / (e^{w Z} - s Z)`` by power-series division.

They share no intermediate code so each serves as the other's oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameterError, PrecisionOverflowError
from .params import ModelParams

OVERFLOW_LIMIT = 1e300

#: Returned by :func:`containment_round` when no sign change occurs in range.
NOT_WITHIN_LIMIT = "not-within-limit"


@dataclass(frozen=True)
class SeriesResult:
    """Coefficient sequences of one engine run.

    ``phij[0]`` holds the seed phi_{-1}(l2) = A, so ``phij[j + 1]`` is
    phi_j(l2).  Use :meth:`phi` to index by the mathematical subscript.
    """

    params: ModelParams
    Fj: np.ndarray
    phij: np.ndarray
    containment_round: Optional[int]
    engine: str
    j_max: int = field(default=0)

    def phi(self, j: int) -> float:
        return float(self.phij[j + 1])

    def signs(self) -> np.ndarray:
        return np.where(self.Fj > 0.0, 1, np.where(self.Fj < 0.0, -1, 0))


def _exp_terms(x: float, n: int) -> np.ndarray:
    """x**k / k! for k = 0..n, built by the ratio recurrence."""
    out = np.empty(n + 1)
    term = 1.0
    for k in range(n + 1):
        out[k] = term
        term *= x / (k + 1)
    return out


def _first_nonpositive(values) -> Optional[int]:
    for j, value in enumerate(values):
        if value <= 0.0:
            return j
    return None


def _check_jmax(j_max: int) -> int:
    if int(j_max) != j_max or j_max < 0:
        raise InvalidParameterError(f"j_max must be a natural number (got {j_max!r})")
    return int(j_max)


def coefficients_by_convolution(params: ModelParams, j_max: int) -> SeriesResult:
    """F_j(l1) and phi_j(l2) for j = 0..j_max from the cross-wise convolutions.

    F_j   = (F0(l1)/A)        sum_nu (-1)^nu/nu! (2pi/sin a)^nu  phi_{j-1-nu}
    phi_j = (phi0(l2)/phi0(l1)) sum_nu (-1)^nu/nu! (a/sin a)^nu   Fhat_{j-nu}

    with phi_{-1} = A, Fhat_0 = phi0(l1) and Fhat_i = F_i otherwise.
    """
    j_max = _check_jmax(j_max)
    p = params
    turn = _exp_terms(-2.0 * math.pi / p.sin_alpha, j_max)
    tail = _exp_terms(-p.vcoef, j_max)
    F = np.zeros(j_max + 1)
    phi_ext = np.zeros(j_max + 2)  # phi_ext[i] = phi_{i-1}
    phi_ext[0] = p.A
    F_hat = np.zeros(j_max + 1)
    scale_F = p.F0_l1 / p.A
    scale_phi = p.phi0_l2 / p.phi0_l1
    for j in range(j_max + 1):
        # phi_{j-1-nu} sits at phi_ext[j - nu]
        F[j] = scale_F * float(np.dot(turn[: j + 1], phi_ext[j::-1]))
        F_hat[j] = p.phi0_l1 if j == 0 else F[j]
        phi_ext[j + 1] = scale_phi * float(np.dot(tail[: j + 1], F_hat[j::-1]))
        if not (abs(F[j]) < OVERFLOW_LIMIT and abs(phi_ext[j + 1]) < OVERFLOW_LIMIT):
            partial = SeriesResult(
                p, F[:j].copy(), phi_ext[: j + 1].copy(), _first_nonpositive(F[:j]),
                "convolution", j - 1,
            )
            raise PrecisionOverflowError(
                f"coefficient magnitude exceeds {OVERFLOW_LIMIT:g} at j={j}",
                last_valid_j=j - 1, partial=partial,
            )
    return SeriesResult(p, F, phi_ext, _first_nonpositive(F), "convolution", j_max)


def coefficients_by_division(params: ModelParams, j_max: int) -> SeriesResult:
    """F_j(l1) from the power-series quotient of the generating function.

    c_j = (n_j - sum_{k=1..j} d_k c_{j-k}) / d_0 with
    n_k = vcoef^k/k! - r [k=1] and d_k = w^k/k! - s [k=1]; F_j = F0(l1) c_j.
    The phi sequence follows from phi(Z) = (phi0(l2)/phi0(l1)) e^{-vcoef Z}
    (F(Z) - F0 + phi0(l1)).
    """
    j_max = _check_jmax(j_max)
    p = params
    num = np.empty(j_max + 1)
    den = np.empty(j_max + 1)
    tn = td = 1.0
    for k in range(j_max + 1):
        num[k] = tn
        den[k] = td
        tn *= p.vcoef / (k + 1)
        td *= p.w / (k + 1)
    if j_max >= 1:
        num[1] -= p.r
        den[1] -= p.s
    c = np.zeros(j_max + 1)
    last = j_max
    for j in range(j_max + 1):
        acc = num[j]
        for k in range(1, j + 1):
            acc -= den[k] * c[j - k]
        c[j] = acc / den[0]
        if not abs(c[j]) * p.F0_l1 < OVERFLOW_LIMIT:
            last = j - 1
            break
    F = p.F0_l1 * c[: last + 1]

    # coefficients of F(Z) - F0 + phi0(l1)
    inner = F.copy()
    inner[0] = p.phi0_l1
    decay = np.empty(last + 1)
    t = 1.0
    for k in range(last + 1):
        decay[k] = t
        t *= -p.vcoef / (k + 1)
    phi = np.empty(last + 2)
    phi[0] = p.A
    ratio = p.phi0_l2 / p.phi0_l1
    for j in range(last + 1):
        total = 0.0
        for k in range(j + 1):
            total += decay[k] * inner[j - k]
        phi[j + 1] = ratio * total

    if last < j_max or not np.all(np.abs(phi) < OVERFLOW_LIMIT):
        bad = last + 1
        too_big = np.nonzero(~(np.abs(phi[1:]) < OVERFLOW_LIMIT))[0]
        if too_big.size:
            bad = min(bad, int(too_big[0]))
        partial = SeriesResult(
            p, F[:bad].copy(), phi[: bad + 1].copy(), _first_nonpositive(F[:bad]),
            "division", bad - 1,
        )
        raise PrecisionOverflowError(
            f"coefficient magnitude exceeds {OVERFLOW_LIMIT:g} at j={bad}",
            last_valid_j=bad - 1, partial=partial,
        )
    return SeriesResult(p, F, phi, _first_nonpositive(F), "division", j_max)


def engine_tolerance(j: int) -> float:
    """Relative agreement expected between the engines at index ``j``."""
    return 1e-9 if j <= 50 else 1e-6


def engine_deviation(a: SeriesResult, b: SeriesResult) -> np.ndarray:
    """Per-coefficient relative deviation of two engine runs."""
    n = min(a.Fj.size, b.Fj.size)
    x, y = a.Fj[:n], b.Fj[:n]
    denom = np.maximum(np.maximum(np.abs(x), np.abs(y)), np.finfo(float).tiny)
    return np.abs(x - y) / denom


def _run_partial(engine, params, j_limit):
    try:
        return engine(params, j_limit), None
    except PrecisionOverflowError as exc:
        return exc.partial, exc


def containment_round(params: ModelParams, j_limit: int):
    """Smallest j <= j_limit with F_j(l1) <= 0, or :data:`NOT_WITHIN_LIMIT`.

    Both engines are run and must agree on the answer.  If the coefficients
    overflow before a sign change is seen, the overflow error propagates
    with the partial information attached.
    """
    if int(j_limit) != j_limit or j_limit < 1:
        raise InvalidParameterError(f"j_limit must be >= 1 (got {j_limit!r})")
    conv, err_c = _run_partial(coefficients_by_convolution, params, int(j_limit))
    div, err_d = _run_partial(coefficients_by_division, params, int(j_limit))
    j_star = conv.containment_round
    n = min(conv.Fj.size, div.Fj.size)
    if j_star is not None and j_star < n:
        if div.containment_round != j_star:
            raise AssertionError(
                f"engines disagree: convolution says {j_star}, division says {div.containment_round}"
            )
        assert np.all(conv.Fj[:j_star] > 0.0)
        return j_star
    if err_c is not None or err_d is not None:
        raise err_c if err_c is not None else err_d
    if div.containment_round is not None:
        raise AssertionError(
            f"engines disagree: convolution says none, division says {div.containment_round}"
        )
    return NOT_WITHIN_LIMIT


def nested_integral_In(params: ModelParams, n: int, x: float) -> float:
    """n-fold nested integral of 1/F0 from 0 to x, in closed form.

    I_n(x) = (ln(F0(x)/A) / cos a)^n / n!, with F0(x) = A + cos(a) x.
    """
    if int(n) != n or not 0 <= n <= 6:
        raise InvalidParameterError(f"n must be an integer in [0, 6] (got {n!r})")
    if not 0.0 <= x <= params.l1 * (1 + 1e-12):
        raise InvalidParameterError(f"x must lie in [0, l1] (got {x!r})")
    c = params.cos_alpha
    if c < 1e-12:
        base = x / params.A  # limit of ln(1 + c x/A)/c as c -> 0
    else:
        base = math.log1p(c * x / params.A) / c
    return base**n / math.factorial(int(n))
