"""Spectra and density-of-states measures of ergodic and incommensurate chains."""

__version__ = "0.1.0"

from .models import (  # noqa: E402
    AlmostMathieu,
    Anderson,
    CoupledChain,
    DisorderLaw,
    HoppingParams,
    ReducedChain,
    SiteIndex,
    disorder_value,
    hopping_eval,
    matrix_element,
    potential_am,
    reduced_coupling,
)
from .truncation import (  # noqa: E402
    LatticeWindow,
    TruncatedOperator,
    assemble,
    build_window,
    eigenvalues,
    truncation_trace_defect,
)
from .ergodic import (  # noqa: E402
    CircleRotation,
    birkhoff_average,
    covariance_residual,
    orbit_fill,
    rotate,
    weyl_sum,
)
from .dos import (  # noqa: E402
    DOSCurve,
    EmpiricalDOS,
    LimitingDOSEstimate,
    empirical_dos,
    integrate,
    ks_distance,
    limiting_dos_coupled,
    limiting_dos_reduced,
    local_dos,
    resolvent_trace_avg,
    smooth,
)
