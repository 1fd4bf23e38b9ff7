"""Builders for the measure families used by the experiments.

Each builder returns an :class:`AtomicMeasure` (or :class:`VectorMeasure`)
produced by an explicit quadrature, and most families also expose a closed
form Fourier transform ``xi -> hat mu(xi)`` that can be handed to
:func:`rieszdecay.transforms.riesz_field` in place of the direct atomic sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, LevelTooDeep, ProfileNotConverged, UnsupportedShape
from .kernels import bessel_j, radius
from .measures import AtomicMeasure, VectorMeasure, ball_volume, sphere_area

MAX_CANTOR_LEVEL = 20


# ---------------------------------------------------------------------------
# Spheres
# ---------------------------------------------------------------------------

def _fibonacci_sphere(n: int) -> np.ndarray:
    golden = math.pi * (3.0 - math.sqrt(5.0))
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    phi = golden * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _hopf_grid(n: int) -> tuple[np.ndarray, np.ndarray, float]:
    # S^3 in Hopf coordinates (eta, a, b) with area element
    # sin(eta) cos(eta) d eta da db; Gauss-Legendre in eta, trapezoid in a, b.
    m = max(4, int(round((n / 4.0) ** (1.0 / 3.0))))
    nphi = 2 * m
    g, w = np.polynomial.legendre.leggauss(m)
    eta = (g + 1.0) * math.pi / 4.0
    weta = w * math.pi / 4.0 * np.sin(eta) * np.cos(eta)
    a = np.arange(nphi) * 2.0 * math.pi / nphi
    E, A, B = np.meshgrid(eta, a, a, indexing="ij")
    W = np.broadcast_to(weta[:, None, None], E.shape) * (2.0 * math.pi / nphi) ** 2
    c, s = np.cos(E).ravel(), np.sin(E).ravel()
    A, B = A.ravel(), B.ravel()
    pts = np.column_stack([c * np.cos(A), c * np.sin(A), s * np.cos(B), s * np.sin(B)])
    return pts, W.ravel(), 2.0 * math.pi / nphi


def sphere_measure(k: int, d: int, n_atoms: int) -> AtomicMeasure:
    """Quadrature of the unit ``k``-sphere in the first ``k+1`` axes.

    Circle: equally spaced atoms. ``k=2``: Fibonacci lattice. ``k=3``: a
    product grid in Hopf coordinates (about ``n_atoms`` atoms, Gauss weights
    in the polar angle, so weights are not all equal); its transform is
    accurate for ``|xi|`` well below ``(n_atoms / 4)^{1/3} / pi``.
    """
    if not 1 <= k <= d - 1:
        raise DimensionMismatch(f"need 1 <= k <= d-1, got k={k}, d={d}")
    if n_atoms < 64:
        raise ValueError("sphere quadrature needs at least 64 atoms")
    if k == 1:
        theta = 2.0 * math.pi * np.arange(n_atoms) / n_atoms
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        res = 2.0 * math.pi / n_atoms
    elif k == 2:
        pts = _fibonacci_sphere(n_atoms)
        res = math.sqrt(4.0 * math.pi / n_atoms)
    elif k == 3:
        pts, w, res = _hopf_grid(n_atoms)
    else:
        raise UnsupportedShape(f"sphere quadrature implemented for k <= 3, got k={k}")
    if k < 3:
        w = np.full(pts.shape[0], sphere_area(k + 1) / pts.shape[0])
    loc = np.zeros((pts.shape[0], d))
    loc[:, :k + 1] = pts
    return AtomicMeasure(loc, w, resolution=res)


def sphere_ft(k: int, d: int):
    """Closed-form transform ``2 pi |xi'|^{-(k-1)/2} J_{(k-1)/2}(2 pi |xi'|)``.

    ``xi'`` is the projection onto the first ``k+1`` axes.
    """
    nu = (k - 1) / 2.0
    area = sphere_area(k + 1)

    def ft(xi):
        xi = np.asarray(xi, dtype=float)
        r = radius(xi[..., :k + 1]) if xi.ndim else np.abs(xi)
        r = np.atleast_1d(r)
        out = np.full(r.shape, area)
        nz = r > 1e-12
        out[nz] = 2.0 * math.pi * r[nz] ** (-nu) * bessel_j(nu, 2.0 * math.pi * r[nz])
        return out.astype(complex)

    return ft


# ---------------------------------------------------------------------------
# Cantor measures
# ---------------------------------------------------------------------------

def cantor_measure(level: int, ratio: float = 1.0 / 3.0) -> AtomicMeasure:
    """Natural probability on the level-``L`` cells of the two-map Cantor set.

    Atoms sit at cell midpoints; the limiting measure has Morrey dimension
    ``log 2 / log(1/ratio)``.
    """
    if level > MAX_CANTOR_LEVEL:
        raise LevelTooDeep(f"level {level} exceeds {MAX_CANTOR_LEVEL}")
    if not 0 < ratio < 0.5:
        raise ValueError("contraction ratio must lie in (0, 1/2)")
    left = np.zeros(1)
    for k in range(level):
        left = np.concatenate([left, left + (1.0 - ratio) * ratio ** k])
    left.sort()
    cell = ratio ** level
    return AtomicMeasure(left + cell / 2.0, np.full(left.size, 2.0 ** -level), resolution=cell)


def cantor_dimension(ratio: float = 1.0 / 3.0) -> float:
    return math.log(2.0) / math.log(1.0 / ratio)


def cantor_ft(level: int, ratio: float = 1.0 / 3.0):
    """Product formula ``exp(-i pi xi) prod_k cos(pi xi (1-r) r^{k-1})``."""

    def ft(xi):
        xi = np.asarray(xi, dtype=float).reshape(-1)
        out = np.exp(-1j * math.pi * xi)
        for k in range(level):
            out = out * np.cos(math.pi * xi * (1.0 - ratio) * ratio ** k)
        return out

    return ft


# ---------------------------------------------------------------------------
# Indicator sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndicatorSet:
    """Box ``prod [lower_i, upper_i]`` or Euclidean ball."""

    shape: str
    d: int
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    center: Optional[tuple] = None
    radius: Optional[float] = None

    def __post_init__(self):
        if self.shape == "box":
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if lo.shape != (self.d,) or hi.shape != (self.d,) or np.any(hi <= lo):
                raise ValueError("box needs d lower/upper corners with upper > lower")
        elif self.shape == "ball":
            if self.radius is None or self.radius <= 0 or len(self.center) != self.d:
                raise ValueError("ball needs a center in R^d and a positive radius")
        else:
            raise UnsupportedShape(f"unsupported shape {self.shape!r}")

    @classmethod
    def box(cls, lower, upper) -> "IndicatorSet":
        lower, upper = tuple(map(float, lower)), tuple(map(float, upper))
        return cls("box", len(lower), lower=lower, upper=upper)

    @classmethod
    def interval(cls, a: float, b: float) -> "IndicatorSet":
        return cls.box((a,), (b,))

    @classmethod
    def cube(cls, side: float, d: int) -> "IndicatorSet":
        return cls.box((0.0,) * d, (float(side),) * d)

    @classmethod
    def ball(cls, center, r: float) -> "IndicatorSet":
        center = tuple(map(float, center))
        return cls("ball", len(center), center=center, radius=float(r))

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        if self.shape == "box":
            return float(np.prod(self.sides))
        return ball_volume(self.d, self.radius)

    @property
    def perimeter(self) -> float:
        if self.shape == "box":
            s = self.sides
            if self.d == 1:
                return 2.0
            return float(2.0 * sum(np.prod(np.delete(s, i)) for i in range(self.d)))
        return sphere_area(self.d) * self.radius ** (self.d - 1)

    def dilated(self, L: float) -> "IndicatorSet":
        if self.shape == "box":
            return IndicatorSet.box(L * np.asarray(self.lower), L * np.asarray(self.upper))
        return IndicatorSet.ball(L * np.asarray(self.center), L * self.radius)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.shape == "box":
            return np.all((x >= self.lower) & (x <= self.upper), axis=-1)
        return radius(x - np.asarray(self.center)) <= self.radius


def indicator_boundary_measure(E: IndicatorSet, n_atoms: int = 4096) -> VectorMeasure:
    """Quadrature of the distributional gradient ``D chi_E = -nu_E H^{d-1}|dE``.

    ``nu_E`` is the outward normal, so the total variation is the perimeter
    and the vector weights sum to zero.
    """
    d = E.d
    if E.shape == "ball":
        c, r = np.asarray(E.center), E.radius
        if d == 1:
            loc = np.array([[c[0] - r], [c[0] + r]])
            return VectorMeasure(loc, np.array([[1.0], [-1.0]]))
        if d == 2:
            theta = 2.0 * math.pi * np.arange(n_atoms) / n_atoms
            u = np.column_stack([np.cos(theta), np.sin(theta)])
            res = 2.0 * math.pi * r / n_atoms
        elif d == 3:
            u = _fibonacci_sphere(n_atoms)
            res = r * math.sqrt(4.0 * math.pi / n_atoms)
        else:
            raise UnsupportedShape("ball boundaries implemented for d <= 3")
        area = E.perimeter / u.shape[0]
        return VectorMeasure(c + r * u, -area * u, resolution=res)

    lo, hi = np.asarray(E.lower), np.asarray(E.upper)
    if d == 1:
        return VectorMeasure(np.array([[lo[0]], [hi[0]]]), np.array([[1.0], [-1.0]]))
    if d > 3:
        raise UnsupportedShape("box boundaries implemented for d <= 3")
    h = (E.perimeter / n_atoms) ** (1.0 / (d - 1))
    locs, weights = [], []
    for axis in range(d):
        others = [i for i in range(d) if i != axis]
        axes = []
        for i in others:
            m = max(1, int(math.ceil((hi[i] - lo[i]) / h)))
            axes.append(lo[i] + (np.arange(m) + 0.5) * (hi[i] - lo[i]) / m)
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d - 1)
        face = float(np.prod([hi[i] - lo[i] for i in others]))
        for side, sign in ((lo[axis], 1.0), (hi[axis], -1.0)):
            pts = np.empty((grid.shape[0], d))
            pts[:, others] = grid
            pts[:, axis] = side
            w = np.zeros((grid.shape[0], d))
            w[:, axis] = sign * face / grid.shape[0]
            locs.append(pts)
            weights.append(w)
    return VectorMeasure(np.vstack(locs), np.vstack(weights), resolution=h)


def indicator_ft(E: IndicatorSet, xi):
    """Exact ``hat chi_E``: sinc products for boxes, ``J_{d/2}`` form for balls."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 0 or (xi.ndim == 1 and E.d > 1)
    pts = xi.reshape(-1, E.d)
    if E.shape == "box":
        lo, hi = np.asarray(E.lower), np.asarray(E.upper)
        mid, side = (lo + hi) / 2.0, hi - lo
        out = np.prod(side * np.sinc(side * pts), axis=1) * np.exp(-2j * math.pi * pts @ mid)
    elif E.shape == "ball":
        c, rho = np.asarray(E.center), E.radius
        r = radius(pts) * rho
        out = np.full(r.shape, ball_volume(E.d, rho), dtype=complex)
        nz = r > 1e-12
        nu = E.d / 2.0
        out[nz] = rho ** E.d * r[nz] ** (-nu) * bessel_j(nu, 2.0 * math.pi * r[nz])
        out = out * np.exp(-2j * math.pi * pts @ c)
    else:
        raise UnsupportedShape(E.shape)
    return out[0] if single else out


def indicator_transform(E: IndicatorSet):
    """``indicator_ft`` bound to ``E`` as a callable on ``(m, d)`` arrays."""
    return lambda xi: indicator_ft(E, np.asarray(xi).reshape(-1, E.d))


# ---------------------------------------------------------------------------
# Band-limited bump and its rescaled random-sign sums
# ---------------------------------------------------------------------------

def _smooth_step(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    pos = x > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, x, 1.0)), 0.0)


@dataclass(frozen=True)
class BumpProfile:
    """Radial plateau ``h(r)``: 1 on ``[0, inner]``, 0 beyond ``outer``.

    The transition is the standard ``exp(-1/x)`` gluing, so ``h`` is smooth
    and monotone. ``phi`` is its inverse Fourier transform (a Schwartz
    function with ``int phi = h(0) = 1``).
    """

    inner: float = 2.0
    outer: float = 4.0
    tail: float = 1e-8
    pitch: float = 1.0 / 16.0

    def hat(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        a = _smooth_step(self.outer - r)
        b = _smooth_step(r - self.inner)
        s = a + b
        return np.where(r <= self.inner, 1.0,
                        np.where(r >= self.outer, 0.0, a / np.where(s > 0, s, 1.0)))

    def phi(self, x, d: int = 1, panels: int = 128) -> np.ndarray:
        """Radial inverse transform ``phi(|x|)``.

        The plateau part is integrated in closed form; the transition band
        uses composite Gauss-Legendre quadrature with ``panels`` panels.
        """
        r = np.atleast_1d(np.asarray(x, float)).reshape(-1)
        g, w = np.polynomial.legendre.leggauss(32)
        edges = np.linspace(self.inner, self.outer, panels + 1)
        half = (edges[1] - edges[0]) / 2.0
        s = ((edges[:-1] + edges[1:]) / 2.0)[:, None] + half * g[None, :]
        s, ws = s.ravel(), np.tile(w * half, panels) * self.hat(s.ravel())
        a = self.inner
        out = np.empty_like(r)
        step = max(1, (1 << 21) // s.size)
        for i in range(0, r.size, step):
            rr = r[i:i + step]
            if d == 1:
                plateau = np.where(rr > 0, np.sin(2 * math.pi * a * rr) / (math.pi * np.where(rr > 0, rr, 1.0)),
                                   2.0 * a)
                band = 2.0 * np.cos(2.0 * math.pi * np.outer(rr, s)) @ ws
            else:
                nu = (d - 2) / 2.0
                pos = rr > 1e-12
                rp = np.where(pos, rr, 1.0)
                k = 2.0 * math.pi * rp
                plateau = np.where(pos, 2.0 * math.pi * rp ** (-nu) * a ** (nu + 1) * bessel_j(nu + 1, k * a) / k,
                                   ball_volume(d, a))
                arg = np.outer(k, s)
                band = 2.0 * math.pi * rp ** (-nu) * (bessel_j(nu, arg) * s ** (nu + 1)) @ ws
                band0 = sphere_area(d) * (s ** (d - 1)) @ ws
                band = np.where(pos, band, band0)
            out[i:i + step] = plateau + band
        return out

    def support_radius(self, d: int = 1) -> float:
        return _support_radius(self, d)


@lru_cache(maxsize=None)
def _support_radius(B: BumpProfile, d: int) -> float:
    x = np.arange(0.0, 200.0, B.pitch)
    vals = np.abs(B.phi(x, d))
    above = np.nonzero(vals >= B.tail * vals.max())[0]
    return float(x[above[-1]] + B.pitch)


@lru_cache(maxsize=None)
def _bump_atoms(B: BumpProfile, d: int) -> tuple[np.ndarray, np.ndarray]:
    X = _support_radius(B, d)
    n = int(math.ceil(X / B.pitch))
    axis = np.arange(-n, n + 1) * B.pitch
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    r = radius(grid)
    keep = r <= X
    grid, r = grid[keep], r[keep]
    ur, inv = np.unique(np.round(r, 12), return_inverse=True)
    coarse = B.phi(ur, d, panels=64)
    fine = B.phi(ur, d, panels=128)
    if np.max(np.abs(fine - coarse)) > 1e-10 * np.max(np.abs(fine)):
        raise ProfileNotConverged("bump inverse transform did not converge")
    w = B.pitch ** d * fine[inv]
    grid.flags.writeable = False
    w.flags.writeable = False
    return grid, w


def bump_phi(B: BumpProfile, d: int = 1) -> AtomicMeasure:
    """Atomization of ``phi`` on the grid ``pitch * Z^d``, truncated where ``|phi|`` is negligible."""
    grid, w = _bump_atoms(B, d)
    return AtomicMeasure(grid, w, resolution=B.pitch)


def bump_family(B: BumpProfile, N: float, j, beta: float, d: int = 1) -> AtomicMeasure:
    """``N^{d-beta} phi(N(x - j))`` as atoms; total variation ``N^{-beta} ||phi||_1``."""
    if N < 1:
        raise ValueError("scale N must be >= 1")
    j = np.broadcast_to(np.asarray(j, float), (d,))
    return bump_phi(B, d).dilated(1.0 / N, N ** -beta).translated(j)


def bump_family_ft(B: BumpProfile, N: float, j, beta: float, d: int = 1):
    j = np.broadcast_to(np.asarray(j, float), (d,))

    def ft(xi):
        xi = np.asarray(xi, float).reshape(-1, d)
        return N ** -beta * B.hat(radius(xi) / N) * np.exp(-2j * math.pi * xi @ j)

    return ft


def rademacher_count(N: float, beta: float) -> int:
    return max(1, int(math.floor(N ** beta + 1e-9)))


@dataclass(frozen=True)
class RademacherSum:
    """``sum_i r_i N^{d-beta} phi(N(x - j_i))`` with seeded fair signs.

    Translates sit on the first axis with gap ``spacing`` bump diameters.
    """

    B: BumpProfile
    N: float
    beta: float
    seed: int
    spacing: float = 16.0
    d: int = 1
    signs: np.ndarray = field(init=False, repr=False)
    translates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.spacing < 16:
            raise ValueError("translate gap must be at least 16 bump diameters")
        m = rademacher_count(self.N, self.beta)
        rng = np.random.default_rng(self.seed)
        signs = 2.0 * rng.integers(0, 2, size=m) - 1.0
        gap = self.spacing * 2.0 * self.B.support_radius(self.d) / self.N
        tr = np.zeros((m, self.d))
        tr[:, 0] = gap * np.arange(m)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "translates", tr)

    @property
    def n_terms(self) -> int:
        return self.signs.size

    def measure(self) -> AtomicMeasure:
        base = bump_phi(self.B, self.d).dilated(1.0 / self.N, self.N ** -self.beta)
        loc = (base.locations[None, :, :] + self.translates[:, None, :]).reshape(-1, self.d)
        w = (self.signs[:, None] * base.weights[None, :]).reshape(-1)
        return AtomicMeasure(loc, w, resolution=base.resolution)

    def transform(self, xi) -> np.ndarray:
        xi = np.asarray(xi, float).reshape(-1, self.d)
        out = np.zeros(xi.shape[0], complex)
        for s, j in zip(self.signs, self.translates):
            out += s * np.exp(-2j * math.pi * xi @ j)
        return self.N ** -self.beta * self.B.hat(radius(xi) / self.N) * out


def rademacher_sum(B: BumpProfile, N: float, beta: float, spacing: float = 16.0,
                   seed: int = 0, d: int = 1) -> AtomicMeasure:
    """Atoms of ``RademacherSum(B, N, beta, seed, spacing, d)``."""
    return RademacherSum(B, N, beta, seed, spacing, d).measure()
