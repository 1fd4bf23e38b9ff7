"""Experiment runners, result records and flat-file writers.

Each runner returns one :class:`ExperimentRecord` per case. A record holds
scalar quantities, named series (for plotting elsewhere), refinement
stability indicators and named pass/fail assertions.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import THRESHOLDS
from .constructions import (BumpProfile, IndicatorSet, RademacherSum, cantor_dimension, cantor_ft,
                            cantor_measure, indicator_transform, sphere_ft, sphere_measure)
from .errors import EtaPOutOfRange, ExponentNotSubcritical, InadmissibleAlpha
from .kernels import remainder_constant, riesz_symbol
from .measures import (AtomicMeasure, FrequencyWindow, Parameters, SampledField, ball_volume,
                       sphere_area, total_variation, validate_parameters)
from .norms import (LowFrequencyCorrection, TimeGrid, annular_l2_average, besov_profile,
                    gagliardo_seminorm, lorentz_norm, morrey_norm, strong_lp_norm, weak_lp_norm)
from .transforms import fourier_transform_atomic, riesz_field_montecarlo

CSV_COLUMNS = ("experiment", "case", "measure", "kind", "name", "x", "value")


# ---------------------------------------------------------------------------
# Records and fits
# ---------------------------------------------------------------------------

@dataclass
class ExperimentRecord:
    """One experiment case: inputs, scalar outputs, series and assertions."""

    experiment: str
    case: str
    measure: str
    params: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)
    seed: Optional[int] = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def add_series(self, name: str, x, y):
        self.series[name] = ([float(v) for v in x], [float(v) for v in y])

    def nonfinite(self) -> list[str]:
        bad = [k for k, v in {**self.quantities, **self.stability}.items() if not math.isfinite(v)]
        bad += [k for k, (_, ys) in self.series.items() if not all(map(math.isfinite, ys))]
        return bad

    def rows(self) -> list[dict]:
        base = {"experiment": self.experiment, "case": self.case, "measure": self.measure}
        out = []
        for kind, items in (("param", self.params), ("quantity", self.quantities),
                            ("stability", self.stability)):
            for k, v in items.items():
                out.append({**base, "kind": kind, "name": k, "x": "", "value": v})
        for k, (xs, ys) in self.series.items():
            for x, y in zip(xs, ys):
                out.append({**base, "kind": "series", "name": k, "x": x, "value": y})
        for k, v in self.assertions.items():
            out.append({**base, "kind": "assertion", "name": k, "x": "", "value": int(bool(v))})
        out.append({**base, "kind": "meta", "name": "seed", "x": "", "value": "" if self.seed is None else self.seed})
        out.append({**base, "kind": "meta", "name": "wall_time", "x": "", "value": self.wall_time})
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["series"] = {k: {"x": xs, "y": ys} for k, (xs, ys) in self.series.items()}
        return d


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    rms: float
    relative: float

    def predict(self, x):
        return self.slope * np.asarray(x, float) + self.intercept


def fit_line(x, y) -> Fit:
    """Least squares line; ``relative`` is ``max |y - yhat| / range(yhat)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    res = y - yhat
    span = np.ptp(yhat)
    rel = float(np.max(np.abs(res)) / span) if span > 0 else math.inf
    return Fit(float(slope), float(intercept), float(np.sqrt(np.mean(res ** 2))), rel)


def loglog_fit(x, y) -> Fit:
    return fit_line(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))


def _params_dict(P: Parameters) -> dict:
    out = {"d": P.d, "alpha": P.alpha, "beta": P.beta, "p_weak": P.p_weak}
    if P.q_lorentz is not None:
        out["q"] = P.q_lorentz
    if P.eta is not None:
        out["eta"] = P.eta
    return out


# ---------------------------------------------------------------------------
# Measure registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureCase:
    """A test measure together with its closed-form transform (if any)."""

    name: str
    mu: AtomicMeasure
    transform: Callable
    d: int
    radial: bool

    @property
    def descriptor(self) -> str:
        return f"{self.name}(d={self.d}, atoms={self.mu.n_atoms})"


def build_measure(name: str, d: Optional[int] = None, **opts) -> MeasureCase:
    """Families: ``delta``, ``zero``, ``circle``, ``sphere2``, ``cantor``, ``segment``."""
    if name in ("delta", "zero"):
        d = d or 1
        w = 1.0 if name == "delta" else 0.0
        mu = AtomicMeasure(np.zeros((1, d)), [w])
        return MeasureCase(name, mu, lambda xi: np.full(np.asarray(xi).reshape(-1, d).shape[0], w, complex),
                           d, True)
    if name == "circle":
        d = d or 2
        mu = sphere_measure(1, d, int(opts.get("n_atoms", 2048)))
        return MeasureCase(name, mu, sphere_ft(1, d), d, d == 2)
    if name == "sphere2":
        d = d or 3
        mu = sphere_measure(2, d, int(opts.get("n_atoms", 8192)))
        return MeasureCase(name, mu, sphere_ft(2, d), d, d == 3)
    if name == "cantor":
        level = int(opts.get("level", 10))
        ratio = float(opts.get("ratio", 1.0 / 3.0))
        return MeasureCase(name, cantor_measure(level, ratio), cantor_ft(level, ratio), 1, True)
    if name == "segment":
        n = int(opts.get("n_atoms", 2000))
        mu = AtomicMeasure((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n), resolution=1.0 / n)
        return MeasureCase(name, mu, lambda xi: fourier_transform_atomic(mu, xi), 1, True)
    raise ValueError(f"unknown measure family {name!r}")


def _case_measure(case: dict) -> MeasureCase:
    extra = {k: case[k] for k in ("n_atoms", "level", "ratio") if k in case}
    return build_measure(case["measure"], case.get("d"), **extra)


def _validated(d, alpha, beta, **kw) -> Parameters:
    return validate_parameters(Parameters(int(d), float(alpha), float(beta), **kw),
                               allow_zero_beta=(beta == 0))


def _window_magnitudes(transform, alpha: float, W: FrequencyWindow):
    """Field magnitudes and radii on a window without storing the points."""
    mags, rads = [], []
    for chunk in W.iter_chunks():
        r = np.sqrt(np.sum(chunk * chunk, axis=1))
        ft = np.abs(transform(chunk))
        mags.append(riesz_symbol(chunk, alpha) * ft if alpha else ft)
        rads.append(r)
    if not mags:
        return np.empty(0), np.empty(0)
    return np.concatenate(mags), np.concatenate(rads)


# ---------------------------------------------------------------------------
# Main inequality
# ---------------------------------------------------------------------------

def run_main_inequality(P: Parameters, measure: MeasureCase, windows, spacing: float,
                        xi_min: float, besov_grid: Optional[TimeGrid] = None,
                        thresholds: Optional[dict] = None) -> ExperimentRecord:
    """Weak-norm LHS (with and without the low-frequency bound) vs ``sqrt(TV * Besov)``.

    The upper estimate adds the bound ``TV (2 pi |xi|)^{-alpha}`` on the omitted
    ball ``|xi| < xi_min``; the lower estimate uses the sampled field only.
    Both must stop growing with the window.
    """
    th = {**THRESHOLDS, **(thresholds or {})}
    t0 = time.perf_counter()
    P = validate_parameters(P, allow_zero_beta=(P.beta == 0))
    rec = ExperimentRecord("main-inequality", f"{measure.name}-a{P.alpha:g}", measure.descriptor,
                           params={**_params_dict(P), "spacing": spacing, "xi_min": xi_min})
    windows = sorted(float(w) for w in windows)
    tv = total_variation(measure.mu)
    rec.quantities["total_variation"] = tv
    if tv == 0:
        rec.quantities.update(besov=0.0, rhs=0.0)
        rec.add_series("lhs_upper", windows, [0.0] * len(windows))
        rec.add_series("ratio", windows, [0.0] * len(windows))
        rec.assertions["bounded_ratio"] = True
        rec.wall_time = time.perf_counter() - t0
        return rec
    prof = besov_profile(measure.mu, P.beta, besov_grid)
    rhs = math.sqrt(tv * prof.norm)
    rec.quantities.update(besov=prof.norm, besov_t_star=prof.t_star, rhs=rhs)
    rec.stability["besov_refinement"] = prof.stability
    W = FrequencyWindow(xi_min, windows[-1], spacing, P.d)
    mags, rads = _window_magnitudes(measure.transform, P.alpha, W)
    corr = LowFrequencyCorrection(tv, P.alpha, xi_min, P.d)
    upper, lower = [], []
    for Xi in windows:
        F = SampledField(mags[rads <= Xi], W.cell_volume)
        upper.append(weak_lp_norm(F, P.p_weak, corr))
        lower.append(weak_lp_norm(F, P.p_weak))
    ratio = np.array(upper) / rhs
    rec.add_series("lhs_upper", windows, upper)
    rec.add_series("lhs_lower", windows, lower)
    rec.add_series("ratio", windows, ratio)
    rec.add_series("ratio_lower", windows, np.array(lower) / rhs)
    fit = loglog_fit(windows, ratio)
    # the sampled field alone must also level off: local slope over the last doubling
    tail = (math.log(lower[-1] / lower[-2]) / math.log(windows[-1] / windows[-2])
            if len(windows) > 1 and lower[-2] > 0 else 0.0)
    rec.quantities.update(ratio_max=float(ratio.max()), ratio_slope=fit.slope, fit_rms=fit.rms,
                          lower_tail_slope=tail)
    rec.assertions["enough_windows"] = len(windows) >= th["min_points"]
    rec.assertions["bounded_ratio"] = fit.slope <= th["bounded_slope"]
    rec.assertions["sampled_field_saturates"] = tail <= th["bounded_slope"]
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Dyadic decomposition of the superlevel set
# ---------------------------------------------------------------------------

def _annulus_nodes(r0: float, r1: float, d: int, nodes_per_unit: float = 16.0):
    g, w = np.polynomial.legendre.leggauss(16)
    n_panels = max(2, int(math.ceil((r1 - r0) * nodes_per_unit / 16.0)))
    edges = np.linspace(r0, r1, n_panels + 1)
    half = (edges[1] - edges[0]) / 2.0
    r = (((edges[:-1] + edges[1:]) / 2.0)[:, None] + half * g).ravel()
    wr = np.tile(w * half, n_panels) * sphere_area(d) * r ** (d - 1)
    return r, wr


def _crossing(ks, x, y) -> float:
    """First level where ``log x - log y`` changes sign, linearly interpolated."""
    diff = np.log(np.asarray(x, float)) - np.log(np.asarray(y, float))
    up = np.nonzero(diff >= 0)[0]
    if up.size == 0 or up[0] == 0:
        return math.nan
    j = up[0]
    return float(ks[j - 1] + (-diff[j - 1]) / (diff[j] - diff[j - 1]))


def n0_rule(P: Parameters, lam: float, tv: float, besov: float) -> float:
    """``log2`` of ``lam^{-2/(2a+b)} (TV * B)^{1/(2a+b)}``."""
    s = 2.0 * P.alpha + P.beta
    return math.log2(lam ** (-2.0 / s) * (tv * besov) ** (1.0 / s))


def verify_dyadic_decomposition(P: Parameters, measure: MeasureCase, lam: float, k_min: int = -4,
                                k_max: int = 12, fit_k_min: int = 3, besov: Optional[float] = None,
                                nodes_per_unit: float = 16.0,
                                thresholds: Optional[dict] = None) -> ExperimentRecord:
    """Chebyshev sums over dyadic annuli ``2^k <= |xi| < 2^{k+1}``.

    ``I1`` terms are ``lam^{-1} int |g|``, ``I2`` terms ``lam^{-2} int |g|^2``
    with ``g`` the Riesz field. Radial measures are integrated with
    Gauss-Legendre nodes in ``|xi|``; the superlevel volume uses the same
    nodes, so each annulus satisfies Chebyshev exactly. The balance level is
    where the Hoelder form of the ``I1`` term meets the ``I2`` term; the
    crossings of the plain ``L^1`` terms and of the partial sums are reported
    alongside it.
    """
    th = {**THRESHOLDS, **(thresholds or {})}
    lo, hi = (P.d - P.beta) / 2.0, P.d - P.beta / 2.0
    if not (lo < P.alpha < hi):
        raise InadmissibleAlpha(f"alpha={P.alpha} outside ({lo}, {hi}): a geometric series diverges")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not measure.radial:
        raise ValueError("the dyadic check integrates radially; use a radial test measure")
    t0 = time.perf_counter()
    rec = ExperimentRecord("dyadic", f"{measure.name}-a{P.alpha:g}", measure.descriptor,
                           params={**_params_dict(P), "lambda": lam, "k_min": k_min, "k_max": k_max})
    tv = total_variation(measure.mu)
    if besov is None:
        prof = besov_profile(measure.mu, P.beta)
        besov = prof.norm
        rec.stability["besov_refinement"] = prof.stability
    ks = np.arange(k_min, k_max + 1)
    a, b, v = [], [], []
    for k in ks:
        r, w = _annulus_nodes(2.0 ** k, 2.0 ** (k + 1), P.d, nodes_per_unit)
        pts = np.zeros((r.size, P.d))
        pts[:, 0] = r
        g = riesz_symbol(pts, P.alpha) * np.abs(measure.transform(pts))
        a.append(float(np.sum(w * g)) / lam)
        b.append(float(np.sum(w * g * g)) / lam ** 2)
        v.append(float(np.sum(w[g > lam])))
    a, b, v = np.array(a), np.array(b), np.array(v)
    # analytic bound for the ball inside the first annulus
    inner = ball_volume(P.d, 2.0 ** k_min)
    inner_i1 = tv * (2.0 * math.pi) ** (-P.alpha) * sphere_area(P.d) * 2.0 ** (k_min * (P.d - P.alpha)) \
        / ((P.d - P.alpha) * lam)
    n0 = n0_rule(P, lam, tv, besov)
    cut = int(math.floor(n0))
    in1 = ks <= cut
    i1, i2 = float(a[in1].sum()), float(b[~in1].sum())
    superlevel = float(v.sum())
    rec.quantities.update(total_variation=tv, besov=besov, N0=n0, I1=i1, I2=i2, superlevel=superlevel,
                          inner_ball_volume=inner, inner_I1_bound=inner_i1)
    rec.add_series("I1_terms", ks, a)
    rec.add_series("I2_terms", ks, b)
    rec.add_series("superlevel_terms", ks, v)
    rec.assertions["chebyshev_per_annulus"] = bool(np.all(v <= np.minimum(a, b) * (1 + 1e-12)))
    rec.assertions["chebyshev_total"] = i1 + i2 >= superlevel

    sel = ks >= fit_k_min
    decay = fit_line(ks[sel], np.log2(b[sel]))
    growth = fit_line(ks[sel], np.log2(a[sel]))
    pred_decay = -(2.0 * P.alpha - (P.d - P.beta))
    pred_growth = P.d - P.alpha - P.beta / 2.0
    rec.quantities.update(I2_exponent=decay.slope, I2_exponent_predicted=pred_decay,
                          I1_exponent=growth.slope, I1_exponent_predicted=pred_growth,
                          I2_fit_rms=decay.rms, I1_fit_rms=growth.rms)
    tol = th["dyadic_rel_tol"]
    rec.assertions["I2_exponent"] = abs(decay.slope / pred_decay - 1.0) <= tol
    rec.assertions["I1_exponent"] = abs(growth.slope / pred_growth - 1.0) <= tol

    # Hoelder form of the I1 terms: lam^{-1} 2^{kd/2} (int_{A_k} |g|^2)^{1/2}
    h = 2.0 ** (ks * P.d / 2.0) * np.sqrt(b)
    rec.add_series("I1_holder_terms", ks, h)
    balance = _crossing(ks, h, b)
    rec.quantities["balance_level"] = balance
    rec.quantities["balance_level_l1_terms"] = _crossing(ks, a, b)
    cuts = ks[:-1]
    p1 = np.array([a[ks <= c].sum() for c in cuts])
    p2 = np.array([b[ks > c].sum() for c in cuts])
    rec.quantities["balance_level_partial_sums"] = _crossing(cuts, p1, p2)
    rec.assertions["balance_near_N0"] = bool(abs(balance - n0) <= th["balance_levels"])
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Annular L2 averages
# ---------------------------------------------------------------------------

def run_l2_average_scan(measure: MeasureCase, beta: float, radii, sampler: str = "lattice",
                        spacing: Optional[float] = None, with_besov: bool = True,
                        thresholds: Optional[dict] = None) -> ExperimentRecord:
    th = {**THRESHOLDS, **(thresholds or {})}
    t0 = time.perf_counter()
    radii = [float(R) for R in radii]
    rec = ExperimentRecord("l2-average", f"{measure.name}-b{beta:.4g}", measure.descriptor,
                           params={"d": measure.d, "beta": beta, "sampler": sampler})
    vals = [annular_l2_average(measure.mu, beta, R, sampler=sampler, transform=measure.transform,
                               spacing=spacing, d=measure.d) for R in radii]
    fit = loglog_fit(radii, vals)
    rec.add_series("average", radii, vals)
    tv = total_variation(measure.mu)
    rec.quantities.update(sup=max(vals), slope=fit.slope, fit_rms=fit.rms, total_variation=tv)
    if with_besov:
        prof = besov_profile(measure.mu, beta)
        rec.quantities["besov"] = prof.norm
        rec.quantities["sup_over_tv_besov"] = max(vals) / (tv * prof.norm)
        rec.stability["besov_refinement"] = prof.stability
    rec.assertions["enough_radii"] = len(radii) >= th["min_points"]
    rec.assertions["bounded"] = abs(fit.slope) <= th["bounded_slope"]
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Indicator scaling laws
# ---------------------------------------------------------------------------

def _shape(kind: str, L: float, d: int) -> IndicatorSet:
    if kind == "box":
        return IndicatorSet.cube(L, d)
    if kind == "ball":
        return IndicatorSet.ball((0.0,) * d, L)
    raise ValueError(f"unknown shape {kind!r}")


def _indicator_weak_norm(E: IndicatorSet, p: float, spacing: float, xi_max: float) -> float:
    W = FrequencyWindow(0.0, xi_max, spacing, E.d)
    mags, _ = _window_magnitudes(indicator_transform(E), 0.0, W)
    return weak_lp_norm(SampledField(mags, W.cell_volume), p)


def run_perimeter_scaling(shapes=("box", "ball"), sizes=(1, 2, 4, 8), d: int = 2,
                          spacing: float = 1 / 32, xi_max: float = 8.0,
                          strong_windows=(4, 8, 16, 32, 64, 128), strong_spacing: float = 1 / 8,
                          thresholds: Optional[dict] = None) -> list[ExperimentRecord]:
    """Weak ``L^{2d/(d+1)}`` norm of ``hat chi_E`` against the perimeter.

    A shape of size ``L`` is sampled with lattice spacing ``spacing / L`` so
    its main lobe is equally resolved at every size; the window
    ``|xi| <= xi_max`` is fixed.
    """
    th = {**THRESHOLDS, **(thresholds or {})}
    p = 2.0 * d / (d + 1.0)
    records = []
    for kind in shapes:
        t0 = time.perf_counter()
        rec = ExperimentRecord("perimeter", f"{kind}-d{d}", f"indicator {kind}",
                               params={"d": d, "p": p, "spacing": spacing, "xi_max": xi_max})
        per, lhs = [], []
        for L in sizes:
            E = _shape(kind, L, d)
            per.append(E.perimeter)
            lhs.append(_indicator_weak_norm(E, p, spacing / L, xi_max))
        fit = loglog_fit(per, lhs)
        rec.add_series("weak_norm", per, lhs)
        rec.add_series("ratio", per, np.array(lhs) / np.sqrt(per))
        rec.quantities.update(slope=fit.slope, fit_rms=fit.rms,
                              ratio_max=float(np.max(np.array(lhs) / np.sqrt(per))))
        rec.assertions["slope_half"] = abs(fit.slope - 0.5) <= th["scaling_slope_tol"]
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)

    # weak vs strong norm on the unit disk over growing windows
    t0 = time.perf_counter()
    E = IndicatorSet.ball((0.0,) * d, 1.0)
    rec = ExperimentRecord("perimeter", f"ball-strong-vs-weak-d{d}", "indicator ball radius 1",
                           params={"d": d, "p": p, "spacing": strong_spacing})
    W = FrequencyWindow(0.0, float(max(strong_windows)), strong_spacing, d)
    mags, rads = _window_magnitudes(indicator_transform(E), 0.0, W)
    strong, weak = [], []
    for Xi in strong_windows:
        F = SampledField(mags[rads <= Xi], W.cell_volume)
        strong.append(strong_lp_norm(F, p) ** p)
        weak.append(weak_lp_norm(F, p))
    m = np.log2(np.asarray(strong_windows, float))
    sfit = fit_line(m, strong)
    wfit = loglog_fit(strong_windows, weak)
    rec.add_series("strong_norm_p", strong_windows, strong)
    rec.add_series("weak_norm", strong_windows, weak)
    rec.quantities.update(strong_slope_per_doubling=sfit.slope, strong_fit_relative=sfit.relative,
                          weak_slope=wfit.slope)
    rec.assertions["strong_grows_log"] = sfit.slope > 0 and sfit.relative < th["divergence_residual"]
    rec.assertions["weak_bounded"] = abs(wfit.slope) <= th["bounded_slope"]
    rec.wall_time = time.perf_counter() - t0
    records.append(rec)
    return records


def run_sobolev_scaling(eta: float, p: float, sizes=(1, 2, 4, 8), d: int = 1, shape: str = "box",
                        spacing: float = 1 / 128, xi_max: float = 64.0, resolution: int = 24,
                        thresholds: Optional[dict] = None) -> ExperimentRecord:
    """Dilation exponents of ``||hat chi_E||_{L^{2d/(d+s),inf}}`` and ``G(E)^{1/2}``, ``s = eta p``.

    Size ``L`` uses lattice spacing ``spacing / L`` inside a fixed window.
    """
    th = {**THRESHOLDS, **(thresholds or {})}
    s = eta * p
    if not 0 < s < 1:
        raise EtaPOutOfRange(f"eta*p = {s} must lie in (0, 1)")
    t0 = time.perf_counter()
    q = 2.0 * d / (d + s)
    rec = ExperimentRecord("sobolev", f"{shape}-d{d}-s{s:g}", f"indicator {shape}",
                           params={"d": d, "eta": eta, "p": p, "s": s, "p_weak": q})
    lhs, rhs = [], []
    for L in sizes:
        E = _shape(shape, L, d)
        lhs.append(_indicator_weak_norm(E, q, spacing / L, xi_max))
        rhs.append(math.sqrt(gagliardo_seminorm(E, eta, p, resolution)))
    fl, fr = loglog_fit(sizes, lhs), loglog_fit(sizes, rhs)
    pred = (d - s) / 2.0
    rec.add_series("lhs", sizes, lhs)
    rec.add_series("rhs", sizes, rhs)
    rec.add_series("ratio", sizes, np.array(lhs) / np.array(rhs))
    rec.quantities.update(lhs_slope=fl.slope, rhs_slope=fr.slope, predicted_slope=pred)
    rec.assertions["matching_exponents"] = abs(fl.slope - fr.slope) <= th["scaling_slope_tol"]
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Random-sign sharpness scan
# ---------------------------------------------------------------------------

def _sharp_field(R: RademacherSum, alpha: float, samples_per_period: int, n_mc: int, seed: int):
    N, d = R.N, R.d
    if d == 1:
        gap = R.translates[1, 0] if R.n_terms > 1 else 1.0
        spacing = 1.0 / (gap * samples_per_period * max(R.n_terms, 4))
        W = FrequencyWindow(N, 2 * N, spacing, 1)
        mags, _ = _window_magnitudes(R.transform, alpha, W)
        return SampledField(mags, W.cell_volume)
    return riesz_field_montecarlo(None, alpha, (N, 2 * N), n_mc, seed, transform=R.transform, d=d)


def run_sharpness_scan(P: Parameters, r_fraction: float = 0.9, Ns=(4, 8, 16, 32, 64), n_seeds: int = 32,
                       seed: int = 0, spacing_factor: float = 16.0, samples_per_period: int = 8,
                       n_mc: int = 20_000, workers: int = 1, control: bool = True,
                       thresholds: Optional[dict] = None) -> ExperimentRecord:
    """Mean over seeds of the weak ``L^r`` norm of the Riesz field of the sign sums on ``N <= |xi| <= 2N``."""
    th = {**THRESHOLDS, **(thresholds or {})}
    P = validate_parameters(P)
    r = r_fraction * P.p_weak
    if r_fraction >= 1.0:
        raise ExponentNotSubcritical(f"r = {r} must be below p_weak = {P.p_weak}")
    t0 = time.perf_counter()
    B = BumpProfile()
    rec = ExperimentRecord("sharpness", f"d{P.d}-a{P.alpha:g}-b{P.beta:g}", "random-sign bump sums",
                           params={**_params_dict(P), "r": r, "r_fraction": r_fraction,
                                   "n_seeds": n_seeds, "spacing_factor": spacing_factor},
                           seed=seed)

    def one(task):
        N, s = task
        R = RademacherSum(B, float(N), P.beta, s, spacing_factor, P.d)
        F = _sharp_field(R, P.alpha, samples_per_period, n_mc, s)
        return weak_lp_norm(F, r), weak_lp_norm(F, P.p_weak)

    tasks = [(N, seed + i) for N in Ns for i in range(n_seeds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]
    res = np.array(results).reshape(len(Ns), n_seeds, 2)
    mean, crit = res[:, :, 0].mean(axis=1), res[:, :, 1].mean(axis=1)
    se = res[:, :, 0].std(axis=1, ddof=1) / math.sqrt(n_seeds) if n_seeds > 1 else np.zeros(len(Ns))
    fit = loglog_fit(Ns, mean)
    pred = P.d / r - P.alpha - P.beta / 2.0
    rec.add_series("mean_weak_norm", Ns, mean)
    rec.add_series("standard_error", Ns, se)
    rec.add_series("terms", Ns, [RademacherSum(B, float(N), P.beta, seed, spacing_factor, P.d).n_terms
                                 for N in Ns])
    rec.quantities.update(exponent=fit.slope, exponent_predicted=pred, fit_rms=fit.rms,
                          exponent_rel_error=fit.slope / pred - 1.0)
    rec.assertions["enough_scales"] = len(Ns) >= 5
    rec.assertions["growth_exponent"] = abs(fit.slope / pred - 1.0) <= th["sharpness_rel_tol"]
    if control:
        cfit = loglog_fit(Ns, crit)
        rec.add_series("control_mean_weak_norm", Ns, crit)
        rec.quantities["control_exponent"] = cfit.slope
        rec.assertions["control_bounded"] = cfit.slope <= th["bounded_slope"]
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Sphere divergence of the Lorentz norm
# ---------------------------------------------------------------------------

def cosine_band_fraction(level: float = 0.2) -> float:
    """Fraction of phases with ``|cos| > level``."""
    return 1.0 - 2.0 / math.pi * math.asin(level)


def ball_minus_cylinder_volume(d: int, k: int, rho: float, c: float) -> float:
    """``|{xi in B(0, rho): |xi'| >= c}|`` with ``xi'`` the first ``k+1`` coordinates."""
    if rho <= c:
        return 0.0
    m = d - (k + 1)
    if m == 0:
        return ball_volume(d, rho) - ball_volume(d, c)
    g, w = np.polynomial.legendre.leggauss(64)
    s = c / 2.0 * (g + 1.0)
    ws = w * c / 2.0
    cyl = float(np.sum(ws * sphere_area(k + 1) * s ** k * ball_volume(m, 1.0) * (rho * rho - s * s) ** (m / 2.0)))
    return ball_volume(d, rho) - cyl


def run_sphere_divergence(P: Parameters, k: int = 1, ms=(3, 4, 5, 6, 7, 8, 9), spacing: float = 0.25,
                          n_t: int = 24, thresholds: Optional[dict] = None) -> ExperimentRecord:
    """Lorentz ``L^{p,q}`` norm of the Riesz field of the ``k``-sphere over windows ``B(0, 2^m)``."""
    th = {**THRESHOLDS, **(thresholds or {})}
    P = validate_parameters(Parameters(P.d, P.alpha, float(k), P.q_lorentz))
    q = P.q_lorentz if P.q_lorentz is not None else 1.0
    t0 = time.perf_counter()
    case = build_measure("sphere2" if k == 2 else "circle", P.d) if k in (1, 2) else None
    if case is None:
        raise ValueError("sphere divergence implemented for k in {1, 2}")
    rec = ExperimentRecord("sphere-divergence", f"d{P.d}-k{k}-a{P.alpha:g}-q{q:g}", case.descriptor,
                           params={**_params_dict(P), "q": q, "k": k, "spacing": spacing})
    W = FrequencyWindow(spacing, 2.0 ** max(ms), spacing, P.d)
    mags, rads = _window_magnitudes(case.transform, P.alpha, W)
    order = np.argsort(rads, kind="stable")
    mags, rads = mags[order], rads[order]
    lor, weak = [], []
    for m in ms:
        n = np.searchsorted(rads, 2.0 ** m, side="right")
        F = SampledField(mags[:n], W.cell_volume)
        lor.append(lorentz_norm(F, P.p_weak, q) ** q)
        weak.append(weak_lp_norm(F, P.p_weak))
    ms_arr = np.asarray(ms, float)
    fit = fit_line(ms_arr, lor)
    half = len(ms) // 2
    s1 = fit_line(ms_arr[:half + 1], lor[:half + 1]).slope
    s2 = fit_line(ms_arr[half:], lor[half:]).slope
    wfit = loglog_fit(2.0 ** ms_arr, weak)
    rec.add_series("lorentz_q", ms, lor)
    rec.add_series("weak_norm", ms, weak)
    rec.quantities.update(lorentz_slope=fit.slope, lorentz_fit_relative=fit.relative,
                          first_half_slope=s1, second_half_slope=s2, weak_slope=wfit.slope)
    rec.stability["slope_half_agreement"] = abs(s1 - s2) / abs(fit.slope) if fit.slope else math.inf
    rec.assertions["lorentz_grows_linearly"] = fit.slope > 0 and fit.relative < th["divergence_residual"]
    rec.assertions["slope_stable"] = rec.stability["slope_half_agreement"] <= th["divergence_stability"]
    rec.assertions["weak_bounded"] = wfit.slope <= th["bounded_slope"]

    # analytic lower bound for the superlevel volume at small heights
    C = remainder_constant((k - 1) / 2.0)
    c_prime = 10.0 * C
    A = 10.0 * (2.0 * math.pi) ** (P.alpha - 1.0) * math.sqrt(math.pi / 2.0)
    e = 1.0 / (P.alpha + k / 2.0)
    rho_max = 2.0 ** max(ms) / 2.0
    t_hi = (max(c_prime, 1.0) * 2.0) ** (-1.0 / e) / A
    t_lo = rho_max ** (-1.0 / e) / A
    ts = np.geomspace(t_lo, t_hi, n_t)
    ck = cosine_band_fraction(0.2)
    asc = np.sort(mags)
    computed = W.cell_volume * (asc.size - np.searchsorted(asc, ts, side="right"))
    bound = np.array([ck * ball_minus_cylinder_volume(P.d, k, (A * t) ** (-e), c_prime) for t in ts])
    rec.add_series("superlevel_computed", ts, computed)
    rec.add_series("superlevel_lower_bound", ts, bound)
    rec.quantities.update(remainder_C=C, C_prime=c_prime, A_alpha=A, C_k=ck,
                          min_superlevel_ratio=float(np.min(computed / bound)))
    rec.assertions["superlevel_dominates_bound"] = bool(np.all(computed >= bound))
    rec.wall_time = time.perf_counter() - t0
    return rec


# ---------------------------------------------------------------------------
# Morrey-Besov embedding constant
# ---------------------------------------------------------------------------

EMBEDDING_FAMILY = (
    ("delta", 1, 0.0, {}, {}),
    ("segment", 1, 1.0, {"n_atoms": 500}, {"n_atoms": 1000}),
    ("cantor", 1, cantor_dimension(), {"level": 8}, {"level": 10}),
    ("circle", 2, 1.0, {"n_atoms": 1024}, {"n_atoms": 2048}),
)


def run_embedding_check(family=EMBEDDING_FAMILY, thresholds: Optional[dict] = None) -> list[ExperimentRecord]:
    """``C_d = max besov / morrey`` over the family, at base and refined resolution."""
    th = {**THRESHOLDS, **(thresholds or {})}
    per_d: dict[int, dict[str, list]] = {}
    records = []
    for name, d, beta, base, fine in family:
        t0 = time.perf_counter()
        out = {}
        for label, opts, grid in (("base", base, TimeGrid()), ("refined", fine, TimeGrid().refined())):
            case = build_measure(name, d, **opts)
            b = besov_profile(case.mu, beta, grid).norm
            m = morrey_norm(case.mu, beta, max_centers=2048 if label == "base" else 4096)
            out[label] = (b, m)
        rec = ExperimentRecord("embedding", f"{name}-d{d}", name, params={"d": d, "beta": beta})
        for label, (b, m) in out.items():
            rec.quantities[f"besov_{label}"] = b
            rec.quantities[f"morrey_{label}"] = m
            rec.quantities[f"ratio_{label}"] = b / m
        per_d.setdefault(d, {"base": [], "refined": []})
        per_d[d]["base"].append(out["base"][0] / out["base"][1])
        per_d[d]["refined"].append(out["refined"][0] / out["refined"][1])
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
    for d, vals in per_d.items():
        c0, c1 = max(vals["base"]), max(vals["refined"])
        rec = ExperimentRecord("embedding", f"C_d{d}", "family maximum", params={"d": d})
        rec.quantities.update(C_base=c0, C_refined=c1)
        rec.stability["C_relative_change"] = abs(c1 - c0) / c0
        rec.assertions["finite"] = math.isfinite(c0) and math.isfinite(c1)
        rec.assertions["stable"] = rec.stability["C_relative_change"] <= th["embedding_stability"]
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj)}")


def write_records(records: list[ExperimentRecord], out_dir: str, experiment: str) -> tuple[str, str]:
    """Write ``<experiment>.csv`` (long format) and ``<experiment>.json``."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{experiment}.csv")
    json_path = os.path.join(out_dir, f"{experiment}.json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerows(rec.rows())
    with open(json_path, "w") as fh:
        json.dump({"experiment": experiment, "records": [r.to_dict() for r in records]}, fh,
                  indent=2, default=_jsonable)
    return csv_path, json_path


# ---------------------------------------------------------------------------
# Config-driven dispatch
# ---------------------------------------------------------------------------

def _capped(values, cap, key=lambda v: v):
    if cap is None:
        return list(values)
    return [v for v in values if key(v) <= cap]


def run_from_config(name: str, cfg: dict, seed: int = 0, workers: int = 1,
                    window_max: Optional[float] = None) -> list[ExperimentRecord]:
    """Run one named experiment with the settings of a loaded config.

    ``window_max`` caps every frequency-window schedule (windows, radii,
    ``2^m``, ``N``) of the experiment.
    """
    ex = cfg["experiments"][name]
    th = cfg["thresholds"]
    if name == "main-inequality":
        out = []
        for c in ex["cases"]:
            P = Parameters(int(c["d"]), float(c["alpha"]), float(c["beta"]))
            out.append(run_main_inequality(P, _case_measure(c), _capped(ex["windows"], window_max),
                                           c["spacing"], c["xi_min"], thresholds=th))
        return out
    if name == "dyadic":
        out = []
        for c in ex["cases"]:
            P = Parameters(int(c["d"]), float(c["alpha"]), float(c["beta"]))
            k_max = ex["k_max"] if window_max is None else min(ex["k_max"], int(math.log2(window_max)) - 1)
            out.append(verify_dyadic_decomposition(P, _case_measure(c), c.get("lam", ex["lam"]), ex["k_min"],
                                                   k_max, ex["fit_k_min"], thresholds=th))
        return out
    if name == "l2-average":
        return [run_l2_average_scan(_case_measure(c), float(c["beta"]), _capped(c["radii"], window_max),
                                    c.get("sampler", "lattice"), thresholds=th) for c in ex["cases"]]
    if name == "perimeter":
        return run_perimeter_scaling(ex["shapes"], ex["sizes"], 2, ex["spacing"], ex["xi_max"],
                                     _capped(ex["strong_windows"], window_max), ex["strong_spacing"],
                                     thresholds=th)
    if name == "sobolev":
        xi_max = ex["xi_max"] if window_max is None else min(ex["xi_max"], window_max)
        return [run_sobolev_scaling(ex["eta"], ex["p"], ex["sizes"], ex["d"], "box", ex["spacing"], xi_max,
                                    ex["resolution"], thresholds=th)]
    if name == "sharpness":
        P = Parameters(int(ex["d"]), float(ex["alpha"]), float(ex["beta"]))
        return [run_sharpness_scan(P, ex["r_fraction"], _capped(ex["Ns"], window_max, lambda N: 2 * N),
                                   ex["n_seeds"], seed, ex["spacing_factor"], ex["samples_per_period"],
                                   workers=workers, thresholds=th)]
    if name == "sphere-divergence":
        P = Parameters(int(ex["d"]), float(ex["alpha"]), float(ex["k"]), float(ex["q"]))
        return [run_sphere_divergence(P, int(ex["k"]), _capped(ex["ms"], window_max, lambda m: 2.0 ** m),
                                      ex["spacing"], thresholds=th)]
    raise KeyError(f"unknown experiment {name!r}")
