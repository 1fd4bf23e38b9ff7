"""Weak-type Fourier decay of Riesz potentials of measures: transforms,
quasinorms, test measures and reproducible numerical experiments."""
from .errors import *  # noqa: F401,F403
from .measures import (AtomicMeasure, FrequencyWindow, Parameters, SampledField, VectorMeasure,
                       total_variation, validate_parameters)
from .kernels import (bessel_j, bessel_leading_term, bessel_remainder, frac_laplacian_symbol,
                      heat_kernel, heat_symbol, riesz_symbol)
from .transforms import (fourier_transform_atomic, heat_convolve, riesz_field, riesz_field_montecarlo,
                         sup_heat_convolve)
from .norms import (annular_l2_average, besov_norm, besov_profile, gagliardo_seminorm, lorentz_norm,
                    morrey_norm, strong_lp_norm, weak_lp_norm)
from .constructions import (BumpProfile, IndicatorSet, RademacherSum, cantor_measure,
                            indicator_boundary_measure, rademacher_sum, sphere_measure)
from .experiments import (ExperimentRecord, run_embedding_check, run_from_config, run_l2_average_scan,
                          run_main_inequality, run_perimeter_scaling, run_sharpness_scan,
                          run_sobolev_scaling, run_sphere_divergence, verify_dyadic_decomposition)

__version__ = "0.1.0"
