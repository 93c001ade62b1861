"""Large-system SINR analysis of MMSE and adaptive least-squares receivers.

The package solves the deterministic fixed-point equations that govern the
limiting SINR of linear receivers over random matrix channels, relates the
MMSE and adaptive LS receivers through a window/load constant, validates
everything against finite-system Monte Carlo, and optimizes training length
for block transmission.
"""

from .als import (
    AlsFirstOrder,
    AlsParams,
    AlsSecondOrder,
    AlsSinr,
    als_steady_state,
    als_stieltjes,
    als_transient_sinr,
    solve_als_first,
    solve_als_second,
)
from .distributions import (
    ScalarDistribution,
    WindowSpec,
    exponential_channel_H11,
    expect,
    ratio_moment_1,
    ratio_moment_2,
    window_distribution,
    window_moments_closed_form,
)
from .errors import (
    ConfigError,
    DegenerateParameterError,
    DomainError,
    IllPosedError,
    NonConvergenceError,
    SingularityError,
)
from .mmse import (
    MmseParams,
    MmseSecondOrder,
    MmseSolution,
    alternate_mmse_sinr,
    mmse_sinr,
    mmse_stieltjes,
    solve_mmse,
    solve_mmse_second_order,
)
from .relation import (
    ZetaContext,
    als_from_mmse,
    capacity_gap,
    poor_wang_zeta,
    zeta_steady,
    zeta_transient,
)
from .rootfind import SolveReport, damped_fixed_point, solve_1d, solve_2d

__version__ = "0.1.0"
