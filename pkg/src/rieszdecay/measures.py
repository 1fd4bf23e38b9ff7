"""Core data types: exponent bundles, atomic and vector measures, frequency
windows and sampled frequency fields.

Every continuous measure used by the toolkit is reduced to a finite list of
weighted point masses, so Fourier transforms are exact finite sums. The
``resolution`` attribute of a measure records the quadrature spacing that
produced it; scale-dependent quantities (heat-semigroup sups, Morrey ratios)
are only meaningful above that scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import AlphaOutOfRange, BetaOutOfRange, DimensionMismatch

#: Largest dimension for which lattice windows are allowed; above it use the
#: Monte Carlo frequency sampler.
MAX_LATTICE_DIM = 3


@dataclass(frozen=True)
class Parameters:
    """Exponent bundle ``(d, alpha, beta, q, eta)``.

    ``p_weak = 2d / (2 alpha + beta)`` is derived, never supplied.
    """

    d: int
    alpha: float
    beta: float
    q_lorentz: Optional[float] = None
    eta: Optional[float] = None
    p_weak: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p_weak", 2.0 * self.d / (2.0 * self.alpha + self.beta))

    @property
    def alpha_range(self) -> tuple[float, float]:
        return (self.d - self.beta) / 2.0, self.d - self.beta / 2.0

    @property
    def admissible(self) -> bool:
        lo, hi = self.alpha_range
        return 0.0 < self.beta <= self.d and lo < self.alpha < hi


def validate_parameters(P: Parameters, allow_zero_beta: bool = False) -> Parameters:
    """Check the admissible range and return a copy with ``p_weak`` recomputed.

    ``allow_zero_beta`` admits ``beta = 0`` (point-mass control cases); the
    open interval for ``alpha`` is still enforced.
    """
    d, alpha, beta = int(P.d), float(P.alpha), float(P.beta)
    if d < 1:
        raise DimensionMismatch(f"dimension must be a positive integer, got {P.d}")
    if not (0.0 < beta <= d or (allow_zero_beta and beta == 0.0)):
        raise BetaOutOfRange(f"beta={beta} not in (0, {d}]")
    lo, hi = (d - beta) / 2.0, d - beta / 2.0
    if not (lo < alpha < hi):
        raise AlphaOutOfRange(f"alpha={alpha} not in ({lo}, {hi}) for d={d}, beta={beta}")
    return Parameters(d, alpha, beta, P.q_lorentz, P.eta)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


class AtomicMeasure:
    """Finite complex measure ``sum_j w_j delta_{x_j}`` on R^d.

    Parameters
    ----------
    locations : array_like, shape (n, d)
    weights : array_like, shape (n,)
    resolution : float, optional
        Spacing of the quadrature that produced the atoms, ``None`` for
        genuinely atomic measures.
    """

    __slots__ = ("locations", "weights", "resolution")

    def __init__(self, locations, weights, resolution: Optional[float] = None):
        loc = np.asarray(locations, dtype=float)
        if loc.ndim == 1:
            loc = loc[:, None]
        w = np.asarray(weights, dtype=complex).reshape(-1)
        if loc.ndim != 2 or loc.shape[0] != w.shape[0]:
            raise DimensionMismatch(
                f"locations {loc.shape} and weights {w.shape} do not describe the same atoms")
        object.__setattr__(self, "locations", _frozen(loc))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "resolution", resolution)

    def __setattr__(self, name, value):
        raise AttributeError("AtomicMeasure is immutable")

    @property
    def dimension(self) -> int:
        return self.locations.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    def __len__(self):
        return self.n_atoms

    def __repr__(self):
        return (f"AtomicMeasure(n_atoms={self.n_atoms}, d={self.dimension}, "
                f"resolution={self.resolution})")

    def __mul__(self, c) -> "AtomicMeasure":
        return AtomicMeasure(self.locations, complex(c) * self.weights, self.resolution)

    __rmul__ = __mul__

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if other.dimension != self.dimension:
            raise DimensionMismatch("cannot add measures of different dimension")
        res = [r for r in (self.resolution, other.resolution) if r is not None]
        return AtomicMeasure(np.vstack([self.locations, other.locations]),
                             np.concatenate([self.weights, other.weights]),
                             min(res) if res else None)

    def translated(self, v) -> "AtomicMeasure":
        return AtomicMeasure(self.locations + np.asarray(v, float), self.weights, self.resolution)

    def dilated(self, scale: float, weight_factor: float = 1.0) -> "AtomicMeasure":
        """Atoms ``x -> scale * x`` with weights multiplied by ``weight_factor``."""
        res = None if self.resolution is None else self.resolution * abs(scale)
        return AtomicMeasure(scale * self.locations, weight_factor * self.weights, res)

    def diameter(self) -> float:
        if self.n_atoms < 2:
            return 0.0
        lo, hi = self.locations.min(axis=0), self.locations.max(axis=0)
        return float(np.linalg.norm(hi - lo))


class VectorMeasure:
    """``d``-vector valued measure on shared atoms (e.g. the gradient of an indicator)."""

    __slots__ = ("locations", "weights", "resolution")

    def __init__(self, locations, weights, resolution: Optional[float] = None):
        loc = np.asarray(locations, dtype=float)
        w = np.asarray(weights, dtype=complex)
        if loc.ndim != 2 or w.shape != loc.shape:
            raise DimensionMismatch(
                f"vector weights {w.shape} must match locations {loc.shape} (one component per axis)")
        object.__setattr__(self, "locations", _frozen(loc))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "resolution", resolution)

    def __setattr__(self, name, value):
        raise AttributeError("VectorMeasure is immutable")

    @property
    def dimension(self) -> int:
        return self.locations.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.locations.shape[0]

    @property
    def components(self) -> list[AtomicMeasure]:
        return [AtomicMeasure(self.locations, self.weights[:, i], self.resolution)
                for i in range(self.dimension)]

    def __repr__(self):
        return f"VectorMeasure(n_atoms={self.n_atoms}, d={self.dimension})"

    def diameter(self) -> float:
        lo, hi = self.locations.min(axis=0), self.locations.max(axis=0)
        return float(np.linalg.norm(hi - lo))


def total_variation(mu) -> float:
    """Total variation ``|mu|(R^d)``; Euclidean magnitude per atom for vector measures."""
    w = mu.weights
    if w.ndim == 2:
        return float(np.sum(np.sqrt(np.sum(np.abs(w) ** 2, axis=1))))
    return float(np.sum(np.abs(w)))


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius ** d


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class FrequencyWindow:
    """Lattice ``spacing * Z^d`` restricted to ``xi_min <= |xi| <= xi_max``."""

    xi_min: float
    xi_max: float
    spacing: float
    d: int

    def __post_init__(self):
        if not (self.xi_min >= 0 and self.xi_max > self.xi_min and self.spacing > 0):
            raise ValueError(f"invalid window {self}")
        if self.d > MAX_LATTICE_DIM:
            raise DimensionMismatch(
                f"lattice windows are capped at d={MAX_LATTICE_DIM}; use the Monte Carlo sampler")

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.d

    def iter_chunks(self, max_points: int = 1 << 20) -> Iterator[np.ndarray]:
        """Yield lattice points slab by slab along the first axis."""
        n = int(math.floor(self.xi_max / self.spacing))
        idx = np.arange(-n, n + 1)
        if self.d == 1:
            pts = idx[:, None] * self.spacing
            r = np.abs(pts[:, 0])
            yield pts[(r >= self.xi_min) & (r <= self.xi_max)]
            return
        tail = np.stack(np.meshgrid(*([idx] * (self.d - 1)), indexing="ij"), axis=-1)
        tail = tail.reshape(-1, self.d - 1) * self.spacing
        tail_r2 = np.sum(tail ** 2, axis=1)
        rows = max(1, max_points // tail.shape[0])
        lo2, hi2 = self.xi_min ** 2, self.xi_max ** 2
        for start in range(0, idx.size, rows):
            first = idx[start:start + rows] * self.spacing
            r2 = first[:, None] ** 2 + tail_r2[None, :]
            keep = (r2 >= lo2) & (r2 <= hi2)
            i, j = np.nonzero(keep)
            if i.size:
                yield np.column_stack([first[i], tail[j]])

    def points(self) -> np.ndarray:
        chunks = list(self.iter_chunks())
        if not chunks:
            return np.empty((0, self.d))
        return np.vstack(chunks)

    def count(self) -> int:
        return sum(c.shape[0] for c in self.iter_chunks())


class SampledField:
    """Complex values sampled on frequency cells of equal volume."""

    __slots__ = ("values", "cell_volume", "xi")

    def __init__(self, values, cell_volume: float, xi: Optional[np.ndarray] = None):
        if not cell_volume > 0:
            raise ValueError("cell_volume must be positive")
        object.__setattr__(self, "values", _frozen(np.asarray(values).reshape(-1)))
        object.__setattr__(self, "cell_volume", float(cell_volume))
        object.__setattr__(self, "xi", None if xi is None else _frozen(xi))

    def __setattr__(self, name, value):
        raise AttributeError("SampledField is immutable")

    def __len__(self):
        return self.values.shape[0]

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def total_volume(self) -> float:
        return len(self) * self.cell_volume

    def distribution(self, lam) -> np.ndarray:
        """``lam -> cell_volume * #{|value| > lam}`` (vectorised over ``lam``)."""
        mags = np.sort(self.magnitudes)
        lam = np.asarray(lam, dtype=float)
        return self.cell_volume * (mags.size - np.searchsorted(mags, lam, side="right"))

    def scaled(self, c) -> "SampledField":
        return SampledField(c * self.values, self.cell_volume, self.xi)
