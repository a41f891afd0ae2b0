"""Left and right fractional operators, their duality, fractional
integration by parts, and right fractional variational problems."""

import os as _os

# FRACDUAL_THREADS caps BLAS threads; it must be applied before numpy loads.
_threads = _os.environ.get("FRACDUAL_THREADS", "").strip()
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ[_var] = _threads

from .duality import IdentityReport, check_duality, via_dual  # noqa: E402
from .fracops import (  # noqa: E402
    ALL_OPERATORS,
    FracOrder,
    Kind,
    OperatorKind,
    OperatorResult,
    Side,
    UnsupportedOrderError,
    apply,
    rl_from_caputo,
    weight_matrix,
)
from .gridfn import (  # noqa: E402
    Analytic,
    ClosedFormFn,
    DomainError,
    FuncSpecError,
    Grid,
    Interval,
    SampledFn,
    dual,
    parse_funcspec,
)
from .ibp import check_ibp_left, check_ibp_right, convergence_study  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ALL_OPERATORS",
    "Analytic",
    "ClosedFormFn",
    "DomainError",
    "FracOrder",
    "FuncSpecError",
    "Grid",
    "IdentityReport",
    "Interval",
    "Kind",
    "OperatorKind",
    "OperatorResult",
    "SampledFn",
    "Side",
    "UnsupportedOrderError",
    "apply",
    "check_duality",
    "check_ibp_left",
    "check_ibp_right",
    "convergence_study",
    "dual",
    "parse_funcspec",
    "rl_from_caputo",
    "via_dual",
    "weight_matrix",
]
