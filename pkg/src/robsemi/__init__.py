"""Semiparametric and optimally robust influence curves over infinitesimal
Hellinger, total variation and contamination neighborhoods, with maxmin
asymptotic tests and Monte Carlo checks."""

from .errors import NumericalError, RobSemiError, ValidationError
from .influence import (ClippedCombination, Hampel, Linear, canonical_ic, finite_dim_canonical_ic,
                        robust_ic_hampel, robust_ic_tv, semiparametric_ic)
from .model import (ScoresModel, discrete_model, exponential_scale_model, load_discrete_model,
                    normal_location_model, product_normal_model)
from .projection import (NeighborhoodBall, project_ball, project_contamination, project_hellinger,
                         project_totalvariation)
from .risk import beta_of_r, bias, equivalent_radius, mse, rel_mse, risk_curves
from .testing import (HypothesisSpec, maxmin_test, maxmin_test_contamination, maxmin_test_hellinger,
                      maxmin_test_tv, power_bound_multisided, power_bound_one_sided, saddle_power)

__all__ = [name for name in dir() if not name.startswith("_")]
