"""Exact Fourier transforms of atomic measures, Riesz-potential frequency
fields, and heat-semigroup convolutions.

All sums are direct ``O(atoms x points)`` evaluations. Work is split into
fixed-size chunks that do not depend on the worker count, so results are
bit-identical for any ``workers`` value.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyProbeSet, NonpositiveTime, ZeroFrequencyInWindow
from .kernels import radius, riesz_symbol
from .measures import (AtomicMeasure, FrequencyWindow, SampledField, VectorMeasure,
                       ball_volume)

_PAIR_BUDGET = 1 << 22
#: Gaussian tails are dropped beyond this many sqrt(t).
TAIL_CUTOFF = 12.0


def _chunked_map(fn, n: int, chunk: int, workers: int):
    starts = list(range(0, n, chunk))
    if workers <= 1 or len(starts) == 1:
        return [fn(s, min(s + chunk, n)) for s in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: fn(s, min(s + chunk, n)), starts))


def _as_points(xi, d: int) -> tuple[np.ndarray, bool]:
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim <= 1
    if xi.ndim == 0:
        xi = xi.reshape(1, 1)
    elif xi.ndim == 1:
        xi = xi.reshape(1, -1) if xi.size == d else xi.reshape(-1, 1)
        single = xi.shape[0] == 1
    if xi.shape[-1] != d:
        raise ValueError(f"points have {xi.shape[-1]} coordinates, measure lives in R^{d}")
    return xi, single


def fourier_transform_atomic(mu, xi, workers: int = 1):
    """``sum_j w_j exp(-2 pi i x_j . xi)`` at one point or an ``(m, d)`` array.

    Vector measures return one column per component.
    """
    pts, single = _as_points(xi, mu.dimension)
    loc = mu.locations
    w = mu.weights
    wr, wi = w.real, w.imag
    has_imag = bool(np.any(wi))
    chunk = max(1, _PAIR_BUDGET // max(1, mu.n_atoms))

    def work(a, b):
        theta = (2.0 * math.pi) * (pts[a:b] @ loc.T)
        c, s = np.cos(theta), np.sin(theta)
        re = c @ wr
        im = -(s @ wr)
        if has_imag:
            re += s @ wi
            im += c @ wi
        return re + 1j * im

    out = np.concatenate(_chunked_map(work, pts.shape[0], chunk, workers), axis=0)
    return out[0] if single else out


def _field_values(transform, alpha, pts):
    ft = transform(pts)
    if ft.ndim == 2:
        ft = np.sqrt(np.sum(np.abs(ft) ** 2, axis=1))
    return riesz_symbol(pts, alpha) * ft if alpha else ft


def riesz_field(mu, alpha: float, W: FrequencyWindow,
                transform: Optional[Callable] = None, workers: int = 1,
                keep_points: bool = True) -> SampledField:
    """Sample ``(2 pi |xi|)^{-alpha} hat mu(xi)`` on the lattice of ``W``.

    ``transform`` replaces the direct atomic sum by a closed form
    ``xi -> hat mu(xi)`` (used for sphere, Cantor and bump families).
    Vector measures are reduced to the Euclidean magnitude per frequency.
    """
    if alpha > 0 and W.xi_min <= 0:
        raise ZeroFrequencyInWindow("window must exclude xi = 0 when alpha > 0")
    if transform is None:
        transform = lambda p: fourier_transform_atomic(mu, p, workers=workers)
    vals, pts = [], []
    for chunk in W.iter_chunks():
        vals.append(_field_values(transform, alpha, chunk))
        if keep_points:
            pts.append(chunk)
    values = np.concatenate(vals) if vals else np.empty(0, complex)
    xi = np.vstack(pts) if keep_points and pts else None
    return SampledField(values, W.cell_volume, xi)


def annulus_volume(d: int, r_in: float, r_out: float) -> float:
    return ball_volume(d, r_out) - ball_volume(d, r_in)


def sample_annulus(rng: np.random.Generator, d: int, r_in: float, r_out: float, n: int) -> np.ndarray:
    """Uniform points in ``r_in <= |xi| <= r_out``."""
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    u = rng.random(n)
    r = (r_in ** d + u * (r_out ** d - r_in ** d)) ** (1.0 / d)
    return g * r[:, None]


def riesz_field_montecarlo(mu, alpha: float, annulus: tuple[float, float], n_samples: int,
                           seed: int, transform: Optional[Callable] = None,
                           d: Optional[int] = None, workers: int = 1) -> SampledField:
    """Riesz field at ``n_samples`` uniform frequencies of an annulus.

    Each sample stands for ``|annulus| / n_samples`` of volume.
    """
    d = d or mu.dimension
    r_in, r_out = annulus
    if not 0 <= r_in < r_out:
        raise ValueError("annulus must satisfy 0 <= r_in < r_out")
    rng = np.random.default_rng(seed)
    pts = sample_annulus(rng, d, r_in, r_out, int(n_samples))
    if transform is None:
        transform = lambda p: fourier_transform_atomic(mu, p, workers=workers)
    values = _field_values(transform, alpha, pts)
    return SampledField(values, annulus_volume(d, r_in, r_out) / n_samples, pts)


# ---------------------------------------------------------------------------
# Heat semigroup
# ---------------------------------------------------------------------------

def _heat_sum(mu, t: float, x: np.ndarray, workers: int = 1) -> np.ndarray:
    loc, w = mu.locations, mu.weights
    d = loc.shape[1]
    norm = (4.0 * math.pi * t) ** (-d / 2.0)
    cutoff = TAIL_CUTOFF * math.sqrt(t)
    n = loc.shape[0]
    vector = w.ndim == 2
    dense = x.shape[0] * n <= 5_000_000 or cutoff >= 0.5 * max(mu.diameter(), 1e-300)

    if dense:
        chunk = max(1, _PAIR_BUDGET // max(1, n))
        # centred coordinates keep the expanded |x - y|^2 accurate
        origin = loc.mean(axis=0)
        lc = loc - origin
        l2 = np.sum(lc * lc, axis=1)

        def work(a, b):
            xc = x[a:b] - origin
            r2 = xc @ lc.T
            r2 *= -2.0
            r2 += np.sum(xc * xc, axis=1)[:, None]
            r2 += l2[None, :]
            np.maximum(r2, 0.0, out=r2)
            r2 *= -1.0 / (4.0 * t)
            np.exp(r2, out=r2)
            return r2 @ w

        out = np.concatenate(_chunked_map(work, x.shape[0], chunk, workers), axis=0)
        return norm * out

    tree = cKDTree(loc)
    chunk = 4096

    def work_sparse(a, b):
        xt = cKDTree(x[a:b])
        pairs = xt.sparse_distance_matrix(tree, cutoff, output_type="ndarray")
        k = np.exp(-pairs["v"] ** 2 / (4.0 * t))
        m = b - a
        if vector:
            cols = []
            for c in range(w.shape[1]):
                wc = w[pairs["j"], c] * k
                cols.append(np.bincount(pairs["i"], wc.real, m) + 1j * np.bincount(pairs["i"], wc.imag, m))
            return np.column_stack(cols)
        wk = w[pairs["j"]] * k
        return np.bincount(pairs["i"], wk.real, m) + 1j * np.bincount(pairs["i"], wk.imag, m)

    out = np.concatenate(_chunked_map(work_sparse, x.shape[0], chunk, workers), axis=0)
    return norm * out


def heat_convolve(mu, t: float, x, workers: int = 1):
    """``(p_t * mu)(x)``; for vector measures the Euclidean magnitude.

    ``x`` is a single point or an ``(m, d)`` array.
    """
    if not t > 0:
        raise NonpositiveTime(f"heat time must be positive, got {t}")
    pts, single = _as_points(x, mu.dimension)
    out = _heat_sum(mu, float(t), pts, workers)
    if out.ndim == 2:
        out = np.sqrt(np.sum(np.abs(out) ** 2, axis=1))
    return out[0] if single else out


def atom_spacing(mu) -> float:
    """Quadrature spacing of ``mu``: its ``resolution`` or the smallest atom gap."""
    if mu.resolution is not None:
        return float(mu.resolution)
    if mu.n_atoms < 2:
        return math.inf
    dist, _ = cKDTree(mu.locations).query(mu.locations, k=2)
    gaps = dist[:, 1]
    gaps = gaps[gaps > 0]
    return float(gaps.min()) if gaps.size else math.inf


@dataclass(frozen=True)
class ProbeSet:
    """Candidate points for a heat-convolution sup, with the grid pitch used."""

    points: np.ndarray
    pitch: float

    @classmethod
    def for_measure(cls, mu, t: float, budget: int = 1024) -> "ProbeSet":
        """Atom locations plus a grid of pitch ``min(sqrt t, spacing)/4`` over the support.

        Atoms are thinned to ``budget // 2`` and the grid is coarsened to at
        most about ``budget`` cells; local refinement in
        :func:`sup_heat_convolve` recovers the resolution lost by thinning.
        """
        st = math.sqrt(t)
        pitch = min(st, atom_spacing(mu)) / 4.0
        loc = mu.locations
        d = loc.shape[1]
        keep = max(1, budget // 2)
        atoms = loc if loc.shape[0] <= keep else loc[:: int(math.ceil(loc.shape[0] / keep))]
        lo = loc.min(axis=0) - 2.0 * st
        hi = loc.max(axis=0) + 2.0 * st
        extent = hi - lo
        cells = np.prod(np.maximum(extent / pitch, 1.0))
        if cells > budget:
            pitch = pitch * (cells / budget) ** (1.0 / d)
        axes = [np.arange(lo[i], hi[i] + pitch / 2, pitch) for i in range(d)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        return cls(np.vstack([atoms, grid]), float(pitch))


def _stencil(d: int) -> np.ndarray:
    offs = np.stack(np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * d), indexing="ij"), axis=-1)
    offs = offs.reshape(-1, d)
    return offs[np.any(offs != 0, axis=1)]


def sup_heat_convolve(mu, t: float, probe: Optional[ProbeSet] = None, refine: bool = True,
                      n_starts: int = 16, workers: int = 1) -> float:
    """``max |p_t * mu|`` over a probe set, then pattern-search refinement.

    The best ``n_starts`` probes are each climbed with a shrinking
    ``3^d`` stencil until the step falls below ``sqrt(t)/256``.
    """
    if probe is None:
        probe = ProbeSet.for_measure(mu, t)
    pts = np.asarray(probe.points, dtype=float)
    if pts.size == 0:
        raise EmptyProbeSet("probe set has no points")
    vals = np.abs(heat_convolve(mu, t, pts, workers))
    best = float(vals.max())
    if not refine:
        return best
    d = pts.shape[1]
    k = min(n_starts, vals.size)
    idx = np.argsort(-vals, kind="stable")[:k]
    cur, cur_val = pts[idx].copy(), vals[idx].copy()
    step = np.full(k, max(probe.pitch, 1e-3 * math.sqrt(t)))
    stop = math.sqrt(t) / 256.0
    sten = _stencil(d)
    for _ in range(200):
        active = step >= stop
        if not np.any(active):
            break
        a = np.nonzero(active)[0]
        cand = cur[a, None, :] + step[a, None, None] * sten[None, :, :]
        cv = np.abs(heat_convolve(mu, t, cand.reshape(-1, d), workers)).reshape(a.size, -1)
        j = np.argmax(cv, axis=1)
        gain = cv[np.arange(a.size), j] > cur_val[a]
        moved = a[gain]
        cur[moved] = cand[gain, j[gain]]
        cur_val[moved] = cv[gain, j[gain]]
        step[a[~gain]] *= 0.5
    return max(best, float(cur_val.max()))
