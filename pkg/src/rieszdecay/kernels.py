"""Closed-form kernels and Fourier multipliers.

Conventions: ``hat f(xi) = int f(x) exp(-2 pi i x.xi) dx``; frequency and
space points are arrays whose last axis holds the coordinates (a bare scalar
is read as a radius).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as _herm
from scipy import integrate, optimize, special

from .errors import NonpositiveTime, QuadratureNotConverged, ZeroFrequency
from .measures import sphere_area

#: Integer-order Bessel functions switch to the large-argument expansion here.
BESSEL_CROSSOVER = 50.0
_TRAPEZOID_NODES = 192
_HANKEL_TERMS = 7


def radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    return np.sqrt(np.sum(x * x, axis=-1))


def _check_time(t):
    if not np.all(np.asarray(t) > 0):
        raise NonpositiveTime(f"heat time must be positive, got {t}")


def heat_kernel(x, t: float, d: int | None = None):
    """Euclidean heat kernel ``(4 pi t)^{-d/2} exp(-|x|^2 / 4t)``."""
    _check_time(t)
    x = np.asarray(x, dtype=float)
    if d is None:
        d = 1 if x.ndim == 0 else x.shape[-1]
    r2 = radius(x) ** 2
    return (4.0 * math.pi * t) ** (-d / 2.0) * np.exp(-r2 / (4.0 * t))


def heat_symbol(xi, t: float):
    """Fourier multiplier of ``p_t *``: ``exp(-4 pi^2 t |xi|^2)``."""
    _check_time(t)
    return np.exp(-4.0 * math.pi ** 2 * t * radius(xi) ** 2)


def riesz_symbol(xi, alpha: float):
    """Fourier multiplier of the Riesz potential, ``(2 pi |xi|)^{-alpha}``."""
    r = radius(xi)
    if np.any(r == 0):
        raise ZeroFrequency("the Riesz symbol is singular at xi = 0")
    return (2.0 * math.pi * r) ** (-alpha)


def frac_laplacian_symbol(xi, eta: float):
    """Fourier multiplier of ``(-Laplacian)^{eta/2}``, ``(2 pi |xi|)^{eta}``."""
    return (2.0 * math.pi * radius(xi)) ** eta


# ---------------------------------------------------------------------------
# Bessel functions of half-integer order
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BesselOrder:
    """Order ``nu = twice_nu / 2`` with ``twice_nu >= 0``."""

    twice_nu: int

    def __post_init__(self):
        if self.twice_nu < 0 or int(self.twice_nu) != self.twice_nu:
            raise ValueError(f"Bessel order must be a nonnegative half-integer, got {self.twice_nu}/2")

    @property
    def nu(self) -> float:
        return self.twice_nu / 2.0

    @classmethod
    def of(cls, nu) -> "BesselOrder":
        if isinstance(nu, BesselOrder):
            return nu
        m = round(2 * float(nu))
        if abs(2 * float(nu) - m) > 1e-12:
            raise ValueError(f"only half-integer orders are supported, got {nu}")
        return cls(int(m))

    @classmethod
    def for_sphere(cls, k: int) -> "BesselOrder":
        """Order ``(k-1)/2`` appearing in the transform of the k-sphere."""
        return cls(k - 1)


def _bessel_series(nu: float, x: np.ndarray, terms: int = 40) -> np.ndarray:
    half = x / 2.0
    out = np.zeros_like(x)
    term = half ** nu / math.gamma(nu + 1.0)
    for k in range(terms):
        out += term
        term = term * (-(half * half)) / ((k + 1) * (k + 1 + nu))
    return out


def _bessel_integer_small(n: int, x: np.ndarray) -> np.ndarray:
    # Bessel's integral over a full period; the trapezoid rule is spectrally
    # accurate for periodic analytic integrands.
    m = _TRAPEZOID_NODES
    tau = np.linspace(0.0, math.pi, m + 1)
    w = np.full(m + 1, 1.0 / m)
    w[0] = w[-1] = 0.5 / m
    out = np.empty_like(x)
    step = max(1, (1 << 20) // (m + 1))
    for s in range(0, x.size, step):
        xs = x[s:s + step]
        out[s:s + step] = np.cos(n * tau[None, :] - xs[:, None] * np.sin(tau)[None, :]) @ w
    return out


def _hankel_pq(nu: float, x: np.ndarray, terms: int = _HANKEL_TERMS):
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coef = 1.0
    inv8x = 1.0 / (8.0 * x)
    power = np.ones_like(x)
    for k in range(1, 2 * terms):
        coef *= (mu - (2 * k - 1) ** 2) / k
        power = power * inv8x
        term = coef * power
        if k % 2:
            q += (-1) ** ((k - 1) // 2) * term
        else:
            p += (-1) ** (k // 2) * term
    return p, q


def _bessel_asymptotic(nu: float, x: np.ndarray) -> np.ndarray:
    p, q = _hankel_pq(nu, x)
    w = x - nu * math.pi / 2.0 - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(w) - q * np.sin(w))


def _bessel_half_odd(m: int, x: np.ndarray) -> np.ndarray:
    # nu = m/2 with m odd: upward recurrence from J_{-1/2}, J_{1/2}; series
    # below the turning point where the recurrence loses digits.
    nu = m / 2.0
    out = np.empty_like(x)
    small = x < max(1.0, nu)
    if np.any(small):
        out[small] = _bessel_series(nu, x[small])
    big = ~small
    if np.any(big):
        xb = x[big]
        amp = np.sqrt(2.0 / (math.pi * xb))
        j_prev, j = amp * np.cos(xb), amp * np.sin(xb)
        order = 0.5
        while order < nu:
            j_prev, j = j, (2.0 * order / xb) * j - j_prev
            order += 1.0
        out[big] = j
    return out


def bessel_j(nu, x):
    """Bessel function ``J_nu(x)`` for half-integer ``nu >= 0`` and ``x >= 0``.

    Odd ``2 nu`` uses the elementary closed forms. Integer orders use Bessel's
    integral for ``x <= 50`` and the Hankel expansion (seven correction
    pairs) beyond.
    """
    order = BesselOrder.of(nu)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).ravel()
    if np.any(xf < 0):
        raise ValueError("bessel_j requires x >= 0")
    if order.twice_nu % 2:
        out = _bessel_half_odd(order.twice_nu, xf)
    else:
        n = order.twice_nu // 2
        out = np.empty_like(xf)
        small = xf <= BESSEL_CROSSOVER
        if np.any(small):
            out[small] = _bessel_integer_small(n, xf[small])
        if np.any(~small):
            out[~small] = _bessel_asymptotic(float(n), xf[~small])
    out = out.reshape(np.shape(x))
    return float(out) if scalar else out


def bessel_leading_term(nu, x):
    nu = BesselOrder.of(nu).nu
    x = np.asarray(x, dtype=float)
    return np.sqrt(2.0 / (math.pi * x)) * np.cos(x - math.pi * nu / 2.0 - math.pi / 4.0)


def bessel_remainder(nu, x):
    """``J_nu(x)`` minus its leading large-argument term (``x >= 1``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1):
        raise ValueError("the remainder is defined for x >= 1")
    out = bessel_j(nu, x) - bessel_leading_term(nu, x)
    return float(out) if np.ndim(out) == 0 else out


def remainder_constant(nu, x_max: float = 1e4, n: int = 20000) -> float:
    """Empirical ``sup |R_nu(x)| x^{3/2}`` over ``[1, x_max]`` (log-spaced)."""
    x = np.geomspace(1.0, x_max, n)
    return float(np.max(np.abs(bessel_remainder(nu, x)) * x ** 1.5))


# ---------------------------------------------------------------------------
# L1 masses of heat-kernel derivatives
# ---------------------------------------------------------------------------

def _multi_indices(d: int, k: int):
    for split in itertools.combinations_with_replacement(range(d), k):
        a = [0] * d
        for i in split:
            a[i] += 1
        yield tuple(a)


def _gauss_derivative(n: int, s):
    # d^n/ds^n exp(-s^2/4) = (-1/2)^n H_n(s/2) exp(-s^2/4)
    c = np.zeros(n + 1)
    c[n] = 1.0
    return (-0.5) ** n * _herm.hermval(np.asarray(s) / 2.0, c) * np.exp(-np.asarray(s) ** 2 / 4.0)


def _gradient_mass(t: float, k: int, d: int) -> float:
    # |nabla^k p_t| (Frobenius) is radial; evaluate it along the first axis.
    terms = []
    for a in _multi_indices(d, k):
        rest = 1.0
        for ai in a[1:]:
            rest *= float(_gauss_derivative(ai, 0.0))
        if rest == 0.0:
            continue
        mult = math.factorial(k) / math.prod(math.factorial(ai) for ai in a)
        terms.append((a[0], mult * rest * rest))
    norm = (4.0 * math.pi) ** (-d / 2.0)
    st = math.sqrt(t)

    def frob(r):
        s = r / st
        tot = sum(m * _gauss_derivative(a0, s) ** 2 for a0, m in terms)
        return norm * t ** (-(k + d) / 2.0) * math.sqrt(tot) * r ** (d - 1)

    kinks = set()
    for a0, _ in terms:
        if a0:
            c = np.zeros(a0 + 1)
            c[a0] = 1.0
            kinks.update(float(2 * z * st) for z in _herm.hermroots(c) if z > 0)
    upper = 40.0 * st
    val, err = integrate.quad(frob, 0.0, upper, points=sorted(kinks) or None,
                              limit=400, epsabs=1e-13, epsrel=1e-12)
    if err > 1e-6 * max(1.0, abs(val)):
        raise QuadratureNotConverged(f"gradient mass quadrature error {err:.2e}")
    return sphere_area(d) * val if d > 1 else 2.0 * val


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, eta: float):
    # nodes/weights on [0, 1] for the weight u^eta
    x, w = special.roots_jacobi(n, 0.0, eta)
    return (x + 1.0) / 2.0, w / 2.0 ** (eta + 1.0)


class _FractionalHeat:
    """Radial profile of ``(-Laplacian)^{eta/2} p_t`` and its ball integrals."""

    def __init__(self, t: float, eta: float, d: int, n: int):
        self.t, self.eta, self.d = t, eta, d
        self.rho_max = 1.25 / math.sqrt(t)
        u, w = _jacobi_rule(n, eta)
        self.rho = u * self.rho_max
        # weight rho^eta absorbed by the Jacobi rule
        self.w = w * self.rho_max ** (eta + 1.0) * (2.0 * math.pi) ** eta \
            * np.exp(-4.0 * math.pi ** 2 * t * self.rho ** 2)

    def profile(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        z = 2.0 * math.pi * np.outer(r, self.rho)
        d = self.d
        if d == 1:
            return 2.0 * np.cos(z) @ self.w
        out = np.empty(r.shape)
        for i, ri in enumerate(r):
            if ri == 0.0:
                out[i] = sphere_area(d) * np.sum(self.w * self.rho ** (d - 1))
            else:
                jn = bessel_j((d - 2) / 2.0, z[i])
                out[i] = 2.0 * math.pi * ri ** (1.0 - d / 2.0) * np.sum(self.w * jn * self.rho ** (d / 2.0))
        return out

    def ball_integral(self, R: float) -> float:
        if R == 0.0:
            return 0.0
        d = self.d
        jn = bessel_j(d / 2.0, 2.0 * math.pi * R * self.rho)
        area = sphere_area(d) if d > 1 else 2.0
        return float(area * R ** (d / 2.0) * np.sum(self.w * jn * self.rho ** (d / 2.0 - 1.0)))


def _fractional_mass(t: float, eta: float, d: int, n: int) -> float:
    prof = _FractionalHeat(t, eta, d, n)
    st = math.sqrt(t)
    grid = np.linspace(0.0, 20.0 * st, 801)
    vals = prof.profile(grid)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(optimize.brentq(lambda r: float(prof.profile(r)[0]), grid[i], grid[i + 1],
                                     xtol=1e-14 * st, rtol=1e-13))
    # total integral of the profile is the symbol at 0, i.e. zero, so the
    # region outside the last sign change carries minus the inner integral
    edges = [0.0] + roots
    inner = [prof.ball_integral(r) for r in edges]
    mass = sum(abs(b - a) for a, b in zip(inner[:-1], inner[1:])) + abs(inner[-1])
    return mass


def kernel_derivative_mass(t: float, order, d: int) -> float:
    """``L^1`` mass of ``nabla^k p_t`` (int ``order``) or ``(-Laplacian)^{eta/2} p_t`` (float).

    Integer orders use the Frobenius norm of the derivative tensor.
    Fractional orders invert the multiplier ``(2 pi |xi|)^eta exp(-4 pi^2 t |xi|^2)``
    with Gauss-Jacobi quadrature, doubling the node count until two
    successive values agree to 1e-6.
    """
    _check_time(t)
    if isinstance(order, (int, np.integer)):
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        return _gradient_mass(float(t), int(order), int(d))
    eta = float(order)
    if not 0.0 < eta < d:
        raise ValueError(f"fractional order must lie in (0, {d})")
    n, prev = 200, None
    while n <= 3200:
        val = _fractional_mass(float(t), eta, int(d), n)
        if prev is not None and abs(val - prev) <= 1e-6 * max(1.0, abs(val)):
            return val
        prev, n = val, 2 * n
    raise QuadratureNotConverged(f"fractional mass did not settle (last change {abs(val - prev):.2e})")
