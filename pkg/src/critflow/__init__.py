"""Flow-line solver for -Delta u = K(x) u^q + mu u with zero Dirichlet data at the critical exponent."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .mesh import Box3, RadialBall, dump_field, load_field  # noqa: E402
from .spectral import EigenBasis, compute_eigenbasis, spectral_gap_constant  # noqa: E402
from .functionals import (  # noqa: E402
    ConstantsReport,
    ProblemData,
    compute_constants,
    eval_I,
    eval_quotient,
    grad_I,
    grad_quotient,
    mp_member,
    sobolev_constant,
)
from .flow import FlowConfig, FlowTrace, PSCandidate, extract_ps, flow_step, initial_data, run_flow  # noqa: E402
from .analysis import (  # noqa: E402
    Example1Params,
    SolutionReport,
    brezis_lieb_check,
    build_example1_K,
    check_lions,
    check_theorem12,
    concentration_monitor,
    estimate_L,
    test_function_ue,
    verify_solution,
)
