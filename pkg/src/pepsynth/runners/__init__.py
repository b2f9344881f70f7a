"""Oracles, search primitives and method runners."""
from .methods import (
    FGM,
    GFOM,
    OGM,
    OGMLS,
    UM,
    Canonical,
    Factored,
    MethodSpec,
    SsepSubgradient,
    SsepSubgradientLS,
    Trajectory,
    run_method,
    unroll_canonical,
)
from .oracles import (
    Oracle,
    PiecewiseMax,
    Quadratic,
    abs_function,
    from_dict,
    from_json,
    nesterov_max,
    polyhedral_max,
    quadratic,
    random_polyhedral,
    random_quadratic,
)
from .search import (
    SearchError,
    exact_line_search,
    orthogonality_residual,
    select_orthogonal_subgradient,
    subspace_minimize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
