"""Versioned experiment defaults and the plain-text config loader.

Config files are INI style, one section per experiment plus ``[thresholds]``;
values are Python literals::

    [thresholds]
    bounded_slope = 0.05

    [sharpness]
    alpha = 0.5
    Ns = [4, 8, 16, 32, 64]

Unknown sections or keys are rejected so typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import ast
import configparser
import copy
import math

DEFAULTS_VERSION = "1.0"

# Acceptance thresholds, fixed from pilot runs of the closed-form oracles.
THRESHOLDS = {
    "bounded_slope": 0.05,       # |log-log slope| for "bounded" sequences
    "dyadic_rel_tol": 0.10,      # annulus exponent fits
    "balance_levels": 2.0,       # I1/I2 balance vs prescribed N0
    "sharpness_rel_tol": 0.15,   # growth exponent of the random-sign scan
    "divergence_residual": 0.15,  # linear-in-m fit residual
    "divergence_stability": 0.15,  # half-range slope agreement
    "scaling_slope_tol": 0.05,   # perimeter and dilation exponents
    "gagliardo_rel_tol": 0.02,
    "embedding_stability": 0.10,
    "min_points": 6,
}

EXPERIMENTS = {
    "main-inequality": {
        "cases": [
            # xi_min is 32 lattice spacings (see norms.INNER_RADIUS_CELLS)
            {"measure": "delta", "d": 1, "beta": 0.0, "alpha": 0.6, "spacing": 1 / 64, "xi_min": 0.5},
            {"measure": "circle", "d": 2, "beta": 1.0, "alpha": 1.0, "spacing": 1 / 8, "xi_min": 4.0},
            {"measure": "cantor", "d": 1, "beta": math.log(2) / math.log(3),
             "alpha": 0.5 * ((1 - math.log(2) / math.log(3)) / 2 + 1 - math.log(2) / math.log(3) / 2),
             "spacing": 1 / 64, "xi_min": 0.5},
        ],
        "windows": [8, 16, 32, 64, 128, 256],
    },
    "dyadic": {
        "cases": [
            {"measure": "circle", "d": 2, "beta": 1.0, "alpha": 1.0},
            {"measure": "circle", "d": 2, "beta": 1.0, "alpha": 1.25},
            {"measure": "sphere2", "d": 3, "beta": 2.0, "alpha": 1.25, "n_atoms": 2048},
        ],
        "lam": 1e-3,
        "k_min": -4,
        "k_max": 12,
        "fit_k_min": 3,
    },
    "l2-average": {
        "cases": [
            {"measure": "delta", "d": 1, "beta": 0.0, "radii": [2, 4, 8, 16, 32, 64, 128]},
            {"measure": "delta", "d": 2, "beta": 0.0, "radii": [2, 4, 8, 16, 32, 64]},
            {"measure": "circle", "d": 2, "beta": 1.0, "radii": [2, 4, 8, 16, 32, 64, 128, 256]},
            {"measure": "cantor", "d": 1, "beta": math.log(2) / math.log(3),
             "radii": [2 ** k for k in range(1, 13)]},
        ],
    },
    "perimeter": {
        "shapes": ["box", "ball"],
        "sizes": [1, 2, 4, 8],
        "spacing": 1 / 32,
        "xi_max": 8.0,
        "strong_windows": [4, 8, 16, 32, 64, 128],
        "strong_spacing": 1 / 8,
    },
    "sobolev": {
        "eta": 0.5,
        "p": 1.0,
        "d": 1,
        "sizes": [1, 2, 4, 8],
        "spacing": 1 / 128,
        "xi_max": 64.0,
        "resolution": 24,
    },
    "sharpness": {
        "d": 1,
        "alpha": 0.5,
        "beta": 0.5,
        "r_fraction": 0.9,
        "Ns": [4, 8, 16, 32, 64],
        "n_seeds": 32,
        "spacing_factor": 16.0,
        "samples_per_period": 8,
    },
    "sphere-divergence": {
        "d": 2,
        "k": 1,
        "alpha": 1.0,
        "q": 1.0,
        "ms": [3, 4, 5, 6, 7, 8, 9],
        "spacing": 0.25,
    },
}


def defaults() -> dict:
    return {"version": DEFAULTS_VERSION, "thresholds": dict(THRESHOLDS),
            "experiments": copy.deepcopy(EXPERIMENTS)}


def _parse(value: str):
    try:
        return ast.literal_eval(value)
    except (ValueError, SyntaxError):
        return value


def load_config(path=None) -> dict:
    """Defaults overlaid with the sections of ``path`` (if given)."""
    cfg = defaults()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    for section in parser.sections():
        items = {k: _parse(v) for k, v in parser.items(section)}
        if section == "thresholds":
            unknown = set(items) - set(THRESHOLDS)
            if unknown:
                raise KeyError(f"unknown threshold(s): {sorted(unknown)}")
            cfg["thresholds"].update(items)
        elif section in cfg["experiments"]:
            unknown = set(items) - set(cfg["experiments"][section])
            if unknown:
                raise KeyError(f"unknown key(s) for [{section}]: {sorted(unknown)}")
            cfg["experiments"][section].update(items)
        else:
            raise KeyError(f"unknown config section [{section}]")
    return cfg
