"""Measure norms and rearrangement quasinorms.

Besov and Morrey sups are taken over declared finite grids, so they are
lower bounds for the true suprema; both report how much they move under
refinement. Weak and Lorentz quasinorms are evaluated exactly for the step
distribution of a sampled field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import EmptyField, EtaPOutOfRange, QNotFinite, QuadratureNotConverged, UnsupportedShape
from .measures import FrequencyWindow, SampledField, ball_volume, sphere_area, total_variation
from .transforms import (ProbeSet, atom_spacing, fourier_transform_atomic, heat_convolve,
                         sample_annulus, sup_heat_convolve)

#: Morrey radii start at this many quadrature spacings.
MORREY_RESOLUTION_FACTOR = 128.0


@dataclass(frozen=True)
class TimeGrid:
    """Geometric times ``t_min * ratio^k <= t_max``."""

    t_min: float = 1e-6
    t_max: float = 1e4
    ratio: float = 2.0 ** 0.25

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max and self.ratio > 1):
            raise ValueError(f"invalid time grid {self}")

    @property
    def times(self) -> np.ndarray:
        n = int(math.floor(math.log(self.t_max / self.t_min) / math.log(self.ratio) + 1e-9))
        return self.t_min * self.ratio ** np.arange(n + 1)

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.t_min, self.t_max, math.sqrt(self.ratio))


def _atom_magnitudes(mu) -> np.ndarray:
    w = mu.weights
    if w.ndim == 2:
        return np.sqrt(np.sum(np.abs(w) ** 2, axis=1))
    return np.abs(w)


# ---------------------------------------------------------------------------
# Besov norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BesovProfile:
    """``t -> t^{(d-beta)/2} ||p_t * mu||_inf`` on a time grid.

    ``stability`` is the relative gain from evaluating the half-step times
    next to the best grid points (the values a grid with ratio
    ``sqrt(ratio)`` would add there).
    """

    times: np.ndarray
    values: np.ndarray
    norm: float
    t_star: float
    stability: float


def _besov_times(mu, G: TimeGrid) -> np.ndarray:
    t = G.times
    h = atom_spacing(mu)
    if math.isfinite(h):
        kept = t[t >= h * h]
        t = kept if kept.size else t[-1:]
    return t


def besov_value(mu, beta: float, t: float, workers: int = 1) -> float:
    d = mu.dimension
    return t ** ((d - beta) / 2.0) * sup_heat_convolve(mu, t, workers=workers)


def besov_profile(mu, beta: float, G: Optional[TimeGrid] = None, workers: int = 1,
                  n_peaks: int = 3) -> BesovProfile:
    """Besov profile over ``G`` (times below the squared atom spacing are skipped).

    A measure given by quadrature of spacing ``h`` is only a faithful
    stand-in for its continuous limit at heat scales ``sqrt(t) >= h``.
    """
    G = G or TimeGrid()
    times = _besov_times(mu, G)
    if total_variation(mu) == 0:
        z = np.zeros_like(times)
        return BesovProfile(times, z, 0.0, float(times[0]), 0.0)
    vals = np.array([besov_value(mu, beta, t, workers) for t in times])
    norm = float(vals.max())
    # half-step times around the leading local maxima
    order = np.argsort(-vals, kind="stable")[:n_peaks]
    half = math.sqrt(G.ratio)
    extra = sorted({float(times[i] * f) for i in order for f in (1.0 / half, half)})
    extra_vals = [besov_value(mu, beta, t, workers) for t in extra]
    refined = max(norm, max(extra_vals))
    stability = (refined - norm) / norm if norm > 0 else 0.0
    return BesovProfile(times, vals, norm, float(times[int(np.argmax(vals))]), float(stability))


def besov_norm(mu, beta: float, G: Optional[TimeGrid] = None, workers: int = 1) -> float:
    """``max_{t in G} t^{(d-beta)/2} sup_x |p_t * mu(x)|``."""
    return besov_profile(mu, beta, G, workers).norm


# ---------------------------------------------------------------------------
# Morrey norm
# ---------------------------------------------------------------------------

def morrey_radius_range(mu) -> tuple[float, float]:
    """Default radii ``[max(gap/4, 128 h), 2 diam]`` (``h`` the quadrature spacing)."""
    diam = mu.diameter()
    h = atom_spacing(mu)
    if mu.n_atoms < 2:
        gap = 1.0
    else:
        from scipy.spatial import cKDTree
        dist, _ = cKDTree(mu.locations).query(mu.locations, k=2)
        pos = dist[:, 1][dist[:, 1] > 0]
        gap = float(pos.min()) if pos.size else 1.0
    r_min = gap / 4.0
    if mu.resolution is not None:
        r_min = max(r_min, MORREY_RESOLUTION_FACTOR * mu.resolution)
    r_max = max(2.0 * diam, r_min)
    if r_min > r_max:
        r_min = r_max
    return r_min, r_max


def morrey_norm(mu, beta: float, centers=None, radii=None, max_centers: int = 2048) -> float:
    """``max |mu|(B(x, r)) / r^beta`` over centers and radii.

    Centers default to the atoms (thinned to ``max_centers``). Without an
    explicit radius grid the sup over ``r`` in the default range is exact for
    each center: the ratio only peaks where a ball boundary hits an atom.
    """
    loc = mu.locations
    mass = _atom_magnitudes(mu)
    if centers is None:
        step = max(1, int(math.ceil(loc.shape[0] / max_centers)))
        centers = loc[::step]
    centers = np.asarray(centers, float).reshape(-1, loc.shape[1])
    r_min, r_max = morrey_radius_range(mu)
    grid = None if radii is None else np.sort(np.asarray(radii, float))
    best = 0.0
    chunk = max(1, (1 << 22) // max(1, loc.shape[0]))
    for s in range(0, centers.shape[0], chunk):
        c = centers[s:s + chunk]
        dist = np.sqrt(np.sum((c[:, None, :] - loc[None, :, :]) ** 2, axis=2))
        order = np.argsort(dist, axis=1, kind="stable")
        dist = np.take_along_axis(dist, order, axis=1)
        cum = np.cumsum(mass[order], axis=1)
        rows = np.arange(c.shape[0])[:, None]
        if grid is None:
            # mass at r_min, then at every atom distance inside [r_min, r_max]
            k = np.array([np.searchsorted(row, r_min, side="right") for row in dist])
            m0 = np.where(k > 0, cum[np.arange(c.shape[0]), np.maximum(k - 1, 0)], 0.0)
            best = max(best, float(np.max(m0)) / r_min ** beta)
            inside = (dist >= r_min) & (dist <= r_max)
            if np.any(inside):
                ratio = np.where(inside, cum / np.where(inside, dist, 1.0) ** beta, 0.0)
                best = max(best, float(ratio.max()))
        else:
            k = np.stack([np.searchsorted(row, grid, side="right") for row in dist])
            m = np.where(k > 0, cum[rows, np.maximum(k - 1, 0)], 0.0)
            best = max(best, float(np.max(m / grid[None, :] ** beta)))
    return best


# ---------------------------------------------------------------------------
# Rearrangement quasinorms
# ---------------------------------------------------------------------------

#: Inner window radius in lattice spacings: lattice counts approximate ball
#: volumes to about 0.5% from there on; the ball inside is handled analytically.
INNER_RADIUS_CELLS = 32


def default_inner_radius(spacing: float) -> float:
    return INNER_RADIUS_CELLS * spacing


@dataclass(frozen=True)
class LowFrequencyCorrection:
    """Bound ``|I_alpha mu^| <= (2 pi |xi|)^{-alpha} M`` on the omitted ball ``|xi| < xi_min``."""

    M: float
    alpha: float
    xi_min: float
    d: int

    def volume(self, lam) -> np.ndarray:
        lam = np.asarray(lam, float)
        with np.errstate(divide="ignore"):
            r = np.where(lam > 0, (self.M / np.where(lam > 0, lam, 1.0)) ** (1.0 / self.alpha)
                         / (2.0 * math.pi), np.inf)
        return ball_volume(self.d, 1.0) * np.minimum(self.xi_min, r) ** self.d

    @property
    def kink(self) -> float:
        """Level below which the whole omitted ball counts."""
        return self.M * (2.0 * math.pi * self.xi_min) ** (-self.alpha)


def _sorted_desc(F: SampledField) -> np.ndarray:
    if len(F) == 0:
        raise EmptyField("sampled field has no samples")
    a = np.sort(F.magnitudes, kind="stable")[::-1]
    return a


def weak_lp_norm(F: SampledField, p: float, lowfreq: Optional[LowFrequencyCorrection] = None) -> float:
    """``sup_lam lam |{|g| > lam}|^{1/p}`` for the sampled step distribution.

    With a low-frequency correction the omitted-ball bound is added to the
    superlevel volume. Between consecutive sorted values the objective is
    quasi-convex in ``lam``, so interval endpoints and the correction's
    kink are the only candidates.
    """
    a = _sorted_desc(F)
    v = F.cell_volume
    n = a.size
    if lowfreq is None:
        k = np.arange(1, n + 1)
        return float(np.max(a * (k * v) ** (1.0 / p)))
    if lowfreq.M > 0:
        gamma = lowfreq.d / (lowfreq.alpha * p)
        if gamma < 1 - 1e-12:
            return math.inf
    asc = a[::-1]
    lam = np.concatenate([a, [lowfreq.kink]])
    lam = lam[lam > 0]
    ge = n - np.searchsorted(asc, lam, side="left")
    gt = n - np.searchsorted(asc, lam, side="right")
    corr = lowfreq.volume(lam)
    best = max(np.max(lam * (ge * v + corr) ** (1.0 / p)),
               np.max(lam * (gt * v + corr) ** (1.0 / p)))
    return float(best)


def lorentz_norm(F: SampledField, p: float, q: float) -> float:
    """``(int_0^inf (lam |{|g| > lam}|^{1/p})^q dlam / lam)^{1/q}``, exact for a step distribution."""
    if not math.isfinite(q):
        raise QNotFinite("use weak_lp_norm for q = infinity")
    if q <= 0:
        raise ValueError("q must be positive")
    a = _sorted_desc(F)
    v = F.cell_volume
    k = np.arange(1, a.size + 1)
    nxt = np.append(a[1:], 0.0)
    total = np.sum((k * v) ** (q / p) * (a ** q - nxt ** q)) / q
    return float(total ** (1.0 / q))


def strong_lp_norm(F: SampledField, p: float) -> float:
    return float((np.sum(F.magnitudes ** p) * F.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Annular L2 averages
# ---------------------------------------------------------------------------

def _ft_callable(mu, transform):
    if transform is not None:
        return transform
    return lambda xi: fourier_transform_atomic(mu, xi)


def _sq(vals):
    vals = np.asarray(vals)
    if vals.ndim == 2:
        return np.sum(np.abs(vals) ** 2, axis=1)
    return np.abs(vals) ** 2


def annular_l2_average(mu, beta: float, R: float, sampler: str = "lattice", transform=None,
                       spacing: Optional[float] = None, n_samples: int = 200_000, seed: int = 0,
                       d: Optional[int] = None, tol: float = 0.01, nodes_per_unit: float = 16.0) -> float:
    """``R^{-(d-beta)} int_{B(0,R)} |hat mu|^2``.

    Samplers
    --------
    ``lattice``: mean of ``|hat mu|^2`` over ``spacing * Z^d`` inside the ball
    times the exact ball volume; the every-other-point sublattice must agree
    within ``tol``.
    ``montecarlo``: the same ratio estimator with uniform samples; the
    standard error must be within ``tol``.
    ``radial``: Gauss-Legendre in ``|xi|`` along the first axis, valid for
    radial transforms; must agree with half the nodes within ``tol``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    d = d or mu.dimension
    ft = _ft_callable(mu, transform)
    vol = ball_volume(d, R)
    scale = R ** (-(d - beta))
    if sampler == "lattice":
        if spacing is None:
            diam = mu.diameter() if mu is not None else 1.0
            spacing = min(R / 64.0, 1.0 / (4.0 * max(diam, 1.0)))
        W = FrequencyWindow(0.0, R, spacing, d)
        tot = cnt = tot2 = cnt2 = 0.0
        for chunk in W.iter_chunks():
            s = _sq(ft(chunk))
            even = np.all(np.rint(chunk / spacing).astype(np.int64) % 2 == 0, axis=1)
            tot += s.sum()
            cnt += s.size
            tot2 += s[even].sum()
            cnt2 += even.sum()
        fine = tot / cnt
        coarse = tot2 / cnt2 if cnt2 else fine
        if fine > 0 and abs(coarse - fine) > tol * fine:
            raise QuadratureNotConverged(
                f"lattice average moved {abs(coarse - fine) / fine:.3g} under spacing doubling")
        return float(scale * vol * fine)
    if sampler == "montecarlo":
        rng = np.random.default_rng(seed)
        pts = sample_annulus(rng, d, 0.0, R, int(n_samples))
        s = _sq(ft(pts))
        mean = s.mean()
        se = s.std(ddof=1) / math.sqrt(s.size) if s.size > 1 else math.inf
        if mean > 0 and se > tol * mean:
            raise QuadratureNotConverged(f"Monte Carlo standard error {se / mean:.3g} exceeds {tol}")
        return float(scale * vol * mean)
    if sampler == "radial":
        def integrate(n_per):
            n_panels = max(4, int(math.ceil(R * n_per / 16.0)))
            g, w = np.polynomial.legendre.leggauss(16)
            edges = np.linspace(0.0, R, n_panels + 1)
            half = (edges[1] - edges[0]) / 2.0
            r = (((edges[:-1] + edges[1:]) / 2.0)[:, None] + half * g).ravel()
            wr = np.tile(w * half, n_panels) * r ** (d - 1) * sphere_area(d)
            pts = np.zeros((r.size, d))
            pts[:, 0] = r
            return float(np.sum(wr * _sq(ft(pts))))
        fine = integrate(nodes_per_unit)
        coarse = integrate(nodes_per_unit / 2.0)
        if fine > 0 and abs(coarse - fine) > tol * fine:
            raise QuadratureNotConverged("radial quadrature not converged")
        return float(scale * fine)
    raise ValueError(f"unknown sampler {sampler!r}")


# ---------------------------------------------------------------------------
# Heat-semigroup interpolation bound
# ---------------------------------------------------------------------------

def heat_lq_norm(mu, t: float, q: float, tol: float = 1e-6, max_points: int = 400_000) -> float:
    """``||p_t * mu||_q`` by a Riemann sum on a grid of pitch ``sqrt(t)/4``."""
    if math.isinf(q):
        return sup_heat_convolve(mu, t)
    d = mu.dimension
    st = math.sqrt(t)
    lo = mu.locations.min(axis=0) - 10.0 * st
    hi = mu.locations.max(axis=0) + 10.0 * st
    pitch = st / 4.0
    cells = np.prod((hi - lo) / pitch)
    if cells > max_points:
        pitch *= (cells / max_points) ** (1.0 / d)
    axes = [np.arange(lo[i], hi[i] + pitch, pitch) for i in range(d)]
    shape = [a.size for a in axes]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.abs(heat_convolve(mu, t, grid)) ** q
    fine = vals.sum() * pitch ** d
    sub = vals.reshape(shape)[tuple(slice(None, None, 2) for _ in range(d))]
    coarse = sub.sum() * (2 * pitch) ** d
    if fine > 0 and abs(coarse - fine) > max(tol, 1e-3) * fine:
        raise QuadratureNotConverged(f"L^{q} grid sum not converged ({abs(coarse - fine) / fine:.3g})")
    return float(fine ** (1.0 / q))


def lq_interpolated_bound(mu, beta: float, q: float, t: float,
                          besov: Optional[float] = None) -> tuple[float, float]:
    """``(t^{(d-beta)(1-1/q)/2} ||p_t * mu||_q, TV^{1/q} B^{1-1/q})``."""
    d = mu.dimension
    inv = 0.0 if math.isinf(q) else 1.0 / q
    if besov is None:
        besov = besov_norm(mu, beta)
    lhs = t ** ((d - beta) * (1.0 - inv) / 2.0) * heat_lq_norm(mu, t, q)
    rhs = total_variation(mu) ** inv * besov ** (1.0 - inv)
    return float(lhs), float(rhs)


# ---------------------------------------------------------------------------
# Gagliardo seminorm of an indicator
# ---------------------------------------------------------------------------

def _graded(a: float, b: float, levels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels refined geometrically toward both ends of ``[a, b]``."""
    levels = min(int(levels), 30)
    mid = (a + b) / 2.0
    half = (b - a) / 2.0
    cuts = half * 2.0 ** -np.arange(levels + 1)
    cuts = np.append(cuts, 0.0)
    g, w = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for hi, lo in zip(cuts[:-1], cuts[1:]):
        c, h = (hi + lo) / 2.0, (hi - lo) / 2.0
        for sign in (-1.0, 1.0):
            xs.append(mid + sign * (half - (c + h * g)))
            ws.append(w * h)
    return np.concatenate(xs), np.concatenate(ws)


def _cos_power_integral(phi: np.ndarray, s: float) -> np.ndarray:
    """``int_0^phi cos(u)^s du`` for ``0 <= phi <= pi/2``."""
    a, b = 0.5, (s + 1.0) / 2.0
    return 0.5 * special.beta(a, b) * special.betainc(a, b, np.sin(phi) ** 2)


def _box_ray_integral(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, s: float) -> np.ndarray:
    """``int_{S^1} rho(x, theta)^{-s} d theta`` inside a rectangle."""
    out = np.zeros(x.shape[0])
    for axis in (0, 1):
        other = 1 - axis
        up = hi[other] - x[:, other]
        down = x[:, other] - lo[other]
        for h in (hi[axis] - x[:, axis], x[:, axis] - lo[axis]):
            out += h ** (-s) * (_cos_power_integral(np.arctan2(up, h), s)
                                + _cos_power_integral(np.arctan2(down, h), s))
    return out


def _ball_ray_integral(r0: np.ndarray, R: float, s: float, levels: int) -> np.ndarray:
    """``int_{S^1} rho^{-s}`` for points at distance ``r0`` from the center of a disk."""
    # rho is smallest (R - r0) at psi = 0, where the nodes are graded
    psi, w = _graded(0.0, math.pi, levels)
    c, sn = np.cos(psi), np.sin(psi)
    rho = -r0[:, None] * c[None, :] + np.sqrt(R * R - (r0[:, None] * sn[None, :]) ** 2)
    return 2.0 * (rho ** (-s)) @ w


def gagliardo_seminorm(E, eta: float, p: float, resolution: int = 24) -> float:
    """``int int |chi_E(x) - chi_E(y)|^p / |x - y|^{d + eta p} dx dy``.

    For convex ``E`` the inner integral over the complement is done along
    rays, ``(1/s) int_{S^{d-1}} rho(x, theta)^{-s}``, with ``s = eta p`` and
    ``rho`` the distance to the boundary along ``theta``; the outer integral
    uses Gauss-Legendre panels graded toward the boundary with
    ``resolution`` levels (at most 30). The innermost panel leaves a relative
    error of order ``2^{-resolution (1 - s)}``: about 1e-4 at ``s = 1/2`` and
    1e-2 at ``s = 0.8`` with the default 24 levels.
    """
    s = eta * p
    if not 0 < s < 1:
        raise EtaPOutOfRange(f"eta*p = {s} must lie in (0, 1)")
    levels = int(resolution)
    if E.shape == "box" and E.d == 1:
        a, b = E.lower[0], E.upper[0]
        x, w = _graded(a, b, levels)
        inner = ((x - a) ** (-s) + (b - x) ** (-s)) / s
        return float(2.0 * np.sum(w * inner))
    if E.shape == "box" and E.d == 2:
        lo, hi = np.asarray(E.lower), np.asarray(E.upper)
        x0, w0 = _graded(lo[0], hi[0], levels)
        x1, w1 = _graded(lo[1], hi[1], levels)
        X = np.stack(np.meshgrid(x0, x1, indexing="ij"), axis=-1).reshape(-1, 2)
        W = np.outer(w0, w1).ravel()
        inner = _box_ray_integral(X, lo, hi, s) / s
        return float(2.0 * np.sum(W * inner))
    if E.shape == "ball" and E.d == 1:
        c, r = E.center[0], E.radius
        from .constructions import IndicatorSet
        return gagliardo_seminorm(IndicatorSet.interval(c - r, c + r), eta, p, resolution)
    if E.shape == "ball" and E.d == 2:
        R = E.radius
        r0, w = _graded(0.0, R, levels)
        keep = r0 > 0
        r0, w = r0[keep], w[keep]
        inner = _ball_ray_integral(r0, R, s, levels) / s
        return float(2.0 * np.sum(w * 2.0 * math.pi * r0 * inner))
    raise UnsupportedShape(f"Gagliardo seminorm not implemented for {E.shape} in d={E.d}")
