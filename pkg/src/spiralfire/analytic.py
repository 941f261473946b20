"""Dominant zeros of ``e^{wZ} - sZ`` and the residue analysis built on them.

A zero ``z = a + b i`` with ``b > 0`` corresponds to an abscissa ``x = w b``
where the curve ``h(X) = e^{X cot X} sin X`` meets the line ``q X``, with
``q = s/w``; then ``a = b cot x``.  For ``q < e`` the first such abscissa lies
in ``(0, pi)`` and gives the dominant pair; the k-th following one lies in
``(2k pi, (2k+1) pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import lambertw

from .errors import InvalidParameterError, NoComplexDominantPairError
from .params import ModelParams

#: Radius of the integration contour used in the residue argument.
CONTOUR_GAMMA = 0.9
#: Additive constant of the lower round bound.
LOWER_BOUND_SHIFT = 2.71

_SCAN_DELTA = 1e-6


@dataclass(frozen=True)
class DominantZero:
    x_root: float
    a: float
    b: float
    rho: float
    phi_arg: float
    dist_to_x0: float

    @property
    def z(self) -> complex:
        return complex(self.a, self.b)


@dataclass(frozen=True)
class ResidueWave:
    amplitude_L: float
    phase_p: float
    L0: float
    sigma: float


def denominator(params: ModelParams, z):
    return np.exp(params.w * z) - params.s * z


def numerator(params: ModelParams, z):
    return np.exp(params.vcoef * z) - params.r * z


def f_value(params: ModelParams, z):
    """The normalised generating function F(Z)/F_0."""
    return numerator(params, z) / denominator(params, z)


def real_zeros(params: ModelParams) -> tuple[float, ...]:
    """Real solutions of ``e^{w x} = s x``; empty when ``s/w < e``."""
    q = params.q
    if q < math.e:
        return ()
    roots = []
    for branch in (0, -1):
        wx = -lambertw(-1.0 / q, branch).real
        roots.append(float(wx / params.w))
    return tuple(sorted(set(roots)))


def _h_minus_line(X, q):
    return np.exp(X / np.tan(X)) * np.sin(X) - q * X


def _log_gap(X: float, q: float) -> float:
    # log h(X) - log(qX) on intervals where sin X > 0; avoids e^{X cot X} overflow
    return X / math.tan(X) + math.log(math.sin(X)) - math.log(q * X)


def _zero_from_abscissa(params: ModelParams, x: float) -> complex:
    b = x / params.w
    return complex(b / math.tan(x), b)


def dominant_zero(params: ModelParams) -> DominantZero:
    """The zero of ``e^{wZ} - sZ`` of least modulus with positive imaginary part.

    Raises :class:`NoComplexDominantPairError` (carrying the real roots)
    when ``q >= e``, i.e. at or below the critical speed.
    """
    q = params.q
    if not q < math.e:
        raise NoComplexDominantPairError(
            f"s/w = {q:.12g} >= e: the dominant zeros are real", real_zeros(params)
        )
    samples = 1_000_000 if q > math.e - 0.05 else 10_000
    xs = np.linspace(_SCAN_DELTA, math.pi - _SCAN_DELTA, samples)
    with np.errstate(over="ignore"):
        gs = _h_minus_line(xs, q)
    flips = np.nonzero(np.signbit(gs[:-1]) != np.signbit(gs[1:]))[0]
    if flips.size == 0:
        raise NoComplexDominantPairError("no sign change of e^{X cot X} sin X - qX on (0, pi)")
    i = int(flips[0])
    x = brentq(lambda X: float(_h_minus_line(X, q)), xs[i], xs[i + 1], xtol=1e-17, rtol=1e-15)
    z = _zero_from_abscissa(params, x)
    rho = abs(z)
    w = params.w
    dist = math.sqrt(max(w * w * rho * rho - 2.0 * w * rho * math.cos(x) + 1.0, 0.0)) / w
    return DominantZero(x_root=x, a=z.real, b=z.imag, rho=rho, phi_arg=x, dist_to_x0=dist)


def secondary_zeros(params: ModelParams, k: int) -> list[complex]:
    """Zeros tied to the intersections p_1..p_k, abscissae in (2i pi, (2i+1) pi)."""
    if int(k) != k or not 0 <= k <= 4:
        raise InvalidParameterError(f"k must be an integer in [0, 4] (got {k!r})")
    if not params.q < math.e:
        raise NoComplexDominantPairError(
            f"s/w = {params.q:.12g} >= e: the dominant zeros are real", real_zeros(params)
        )
    q = params.q
    out = []
    for i in range(1, int(k) + 1):
        lo, hi = 2 * i * math.pi, (2 * i + 1) * math.pi
        xs = np.linspace(lo + 1e-9, hi - 1e-9, 10_000)
        gs = np.array([_log_gap(x, q) for x in xs])
        flips = np.nonzero(np.signbit(gs[:-1]) != np.signbit(gs[1:]))[0]
        j = int(flips[0])
        x = brentq(_log_gap, xs[j], xs[j + 1], args=(q,), xtol=1e-15, rtol=1e-15)
        out.append(_zero_from_abscissa(params, x))
    return out


def secondary_zero_moduli(params: ModelParams, k: int) -> list[float]:
    """Moduli ``(x_i/w) / |sin x_i|`` of the zeros attached to p_1..p_k."""
    return [abs(z) for z in secondary_zeros(params, k)]


def common_zero(params: ModelParams) -> complex:
    return complex(params.cos_alpha, params.sin_alpha)


def rational_common_zero(params: ModelParams, q: int) -> complex:
    """Candidate common zero ``cos a + (q+1) sin a i`` for ``alpha = 2 p pi / q``.

    The real parts of both functions vanish there, but the imaginary part of
    the numerator equals ``-q r sin(alpha)``; only ``q = 0`` gives a zero.
    """
    return complex(params.cos_alpha, (q + 1) * params.sin_alpha)


def common_zero_residual(params: ModelParams, z: complex) -> float:
    return max(abs(numerator(params, z)), abs(denominator(params, z)))


def common_zero_check(params: ModelParams) -> float:
    """Largest of |numerator| and |denominator| at ``cos a + sin a i``."""
    return common_zero_residual(params, common_zero(params))


def residue_bracket(params: ModelParams, z0: DominantZero, t):
    """The four-cosine bracket whose sign decides the sign of F_t."""
    E = math.exp(params.vcoef * z0.a)
    rho, phi, w, r = z0.rho, z0.phi_arg, params.w, params.r
    vb = params.vcoef * z0.b
    t = np.asarray(t, dtype=float)
    return (
        E / rho**2 * np.cos((t + 1) * phi - vb)
        - E * w / rho * np.cos((t + 2) * phi - vb)
        - (r / rho * np.cos(t * phi) - r * w * np.cos((t + 1) * phi))
    )


def _residue_prefactor(params: ModelParams, z0: DominantZero) -> float:
    w = params.w
    return 2.0 / (params.s * ((w * z0.a - 1.0) ** 2 + (w * z0.b) ** 2))


def residue_direct(params: ModelParams, z0: DominantZero, j: int) -> float:
    """-(mu + conj(mu)) from the simple-pole residue 1/(s (w z0 - 1))."""
    z = z0.z
    mu = numerator(params, z) / (params.s * (params.w * z - 1.0) * z ** (j + 1))
    return -2.0 * mu.real


def residue_sum(params: ModelParams, z0: DominantZero, j: int) -> float:
    """-(mu + conj(mu)) for g(Z) = f(Z)/Z^{j+1}, via the closed cosine form.

    The direct complex residue is evaluated alongside; both must agree to
    1e-8 relative to the size of the four-term envelope.
    """
    closed = float(residue_bracket(params, z0, j)) * _residue_prefactor(params, z0) * z0.rho ** (1 - j)
    direct = residue_direct(params, z0, j)
    envelope = residue_envelope(params, z0, j)
    if abs(closed - direct) > 1e-8 * max(abs(closed), envelope):
        raise ArithmeticError(
            f"residue routes disagree at j={j}: closed={closed!r} direct={direct!r}"
        )
    return closed


def residue_envelope(params: ModelParams, z0: DominantZero, j: int) -> float:
    """Upper bound on |residue_sum| at index ``j`` from the four cosine amplitudes."""
    E = math.exp(params.vcoef * z0.a)
    rho, w, r = z0.rho, params.w, params.r
    terms = E / rho**2 + E * w / rho + r / rho + r * w
    return 2.0 / (params.s * w * z0.dist_to_x0) * terms * rho ** (1 - j)


def add_waves(a1: float, p1: float, a2: float, p2: float) -> tuple[float, float]:
    """Amplitude and phase of ``a1 sin(t + p1) + a2 sin(t + p2)``.

    a3 = sqrt(a1^2 + a2^2 + 2 a1 a2 cos(p1 - p2)); the phase is
    p1 + arcsin(a2 sin(p2 - p1) / a3), taken on the quadrant-correct branch.
    """
    a3 = math.sqrt(max(a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * math.cos(p1 - p2), 0.0))
    p3 = p1 + math.atan2(a2 * math.sin(p2 - p1), a1 + a2 * math.cos(p2 - p1))
    return a3, p3


def wave(params: ModelParams, z0: DominantZero) -> ResidueWave:
    """Write the residue bracket as ``L sin(t phi + p)``."""
    E = math.exp(params.vcoef * z0.a)
    rho, phi, w, r = z0.rho, z0.phi_arg, params.w, params.r
    vb = params.vcoef * z0.b
    strong = add_waves(E / rho**2, phi - vb + math.pi / 2, E * w / rho, 2 * phi - vb + 1.5 * math.pi)
    weak = add_waves(r * w, phi + math.pi / 2, r / rho, 1.5 * math.pi)
    L, p = add_waves(strong[0], strong[1], weak[0], weak[1])
    root = math.sqrt(max(w * w * rho * rho - 2.0 * w * rho * math.cos(phi) + 1.0, 0.0))
    L0 = root * (E / rho**2 - r / rho)
    return ResidueWave(amplitude_L=L, phase_p=p, L0=L0, sigma=p / phi)


def major_coefficient(params: ModelParams, z0: DominantZero) -> float:
    """``e^{vcoef a} / |z0| - r``; tends to about 7.82 at the critical angle."""
    return math.exp(params.vcoef * z0.a) / z0.rho - params.r


def sigma_limit(params: ModelParams) -> float:
    """Closed-form limit of ``p / phi`` evaluated with the given parameters."""
    vw = params.vcoef / params.w
    return (params.r / (math.exp(vw) * params.w - params.r) + 1.0) * (1.0 - vw) + 1.0 / 3.0


def triangle_angles(phi: float) -> tuple[float, float]:
    """Angles (tau, gamma) of the triangle with base 1, base angle phi, height phi."""
    if phi <= 0.0:
        raise InvalidParameterError("phi must be positive")
    tau = math.atan2(math.sin(phi) - phi * math.cos(phi), phi * math.sin(phi))
    return tau, math.pi / 2 - phi


def contour_integral(params: ModelParams, j: int, gamma: float = CONTOUR_GAMMA, n: int = 4096) -> float:
    """(1/2 pi i) times the integral of f(u)/u^{j+1} over |u| = gamma (trapezoid)."""
    theta = 2.0 * math.pi * np.arange(n) / n
    u = gamma * np.exp(1j * theta)
    values = f_value(params, u) / u ** (j + 1) * u
    return float(np.mean(values).real)


def _abs_f_on_circle(params: ModelParams, gamma: float, psi):
    v, r, w, s = params.vcoef, params.r, params.w, params.s
    c, sn = np.cos(psi), np.sin(psi)
    num = (
        np.exp(2 * v * gamma * c)
        - 2 * np.exp(v * gamma * c) * r * gamma * np.cos(v * gamma * sn - psi)
        + r * r * gamma * gamma
    )
    den = (
        np.exp(2 * w * gamma * c)
        - 2 * np.exp(w * gamma * c) * s * gamma * np.cos(w * gamma * sn - psi)
        + s * s * gamma * gamma
    )
    return np.sqrt(num / den)


def contour_bound_D(params: ModelParams, gamma: float = CONTOUR_GAMMA, grid: int = 4096) -> float:
    """Maximum of |f(gamma e^{i psi})| over psi in [0, 2 pi]."""
    if not 0.0 < gamma < 1.0:
        raise InvalidParameterError(f"gamma must lie in (0, 1) (got {gamma!r})")
    psi = np.linspace(0.0, 2.0 * math.pi, grid + 1)
    values = _abs_f_on_circle(params, gamma, psi)
    i = int(np.argmax(values))
    step = psi[1] - psi[0]
    lo, hi = psi[max(i - 1, 0)], psi[min(i + 1, grid)]
    res = minimize_scalar(
        lambda x: -float(_abs_f_on_circle(params, gamma, x)),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
    )
    best_psi, best = (res.x, -res.fun) if -res.fun >= values[i] else (psi[i], values[i])
    assert abs(best_psi - math.pi) <= step, f"maximum at psi={best_psi}, expected pi"
    return float(best)


def predict_rounds(params: ModelParams) -> dict:
    """Bracket ``(pi/phi - 2.71, 2 pi/phi + 1]`` for the containment round."""
    z0 = dominant_zero(params)
    phi = z0.phi_arg
    upper = 2.0 * math.pi / phi + 1.0
    lower = math.pi / phi - LOWER_BOUND_SHIFT
    assert lower < upper
    return {"upper": upper, "lower": lower, "phi": phi}
