"""Bessel I_n / J_m, Laguerre L_n and Marcum Q_M with several independent
representations each, plus a harness that checks identities between them."""

from .errors import DomainError, EvaluationError, RangeError
from .kernels import (DEFAULT_POLICY, ERFI_MAX_ARG, CompensatedSum, EvalResult, SeriesPolicy, erf,
                      erfi, regularized_upper_gamma_int, sum_series, upper_gamma_int)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_finite, integrate_semi_infinite
from .special import (GenArgs, bessel_i, bessel_i_integral, bessel_j, bessel_tail_weighted,
                      gen_full_range, laguerre, laguerre_integral, laguerre_weighted_sum, s_half_range)
from .marcum import (CONTINUATION_MAX_X, MarcumArgs, MarcumResult, marcum_q, marcum_q_integral,
                     marcum_q_limits, marcum_q_recurrence, marcum_q_series, q0_diag, q0_imag_diag,
                     q0_via_genfunc)
from .harness import (IDENTITY_IDS, GridSpec, IdentityCase, Policies, VerificationReport,
                      render_report, run_grid, verify_point)

__version__ = "0.1.0"
