"""Numerical experiments with maximal functions, Riesz capacities,
Lipschitz truncation and the area formula on uniform grids.

Fields are numpy arrays shaped like the grid (axis 0 slowest); vector
fields carry one extra trailing axis for components, masks are boolean.
"""

from ._core import (
    Grid,
    InputError,
    InvariantViolation,
    __version__,
    area_formula,
    capacity,
    generate,
    jacobian,
    kernel_value,
    lipschitz_modulus,
    maximal_function,
    precise_representative,
    riesz_potential,
    run_config,
    truncation_sets,
)

__all__ = [
    "Grid",
    "InputError",
    "InvariantViolation",
    "__version__",
    "area_formula",
    "capacity",
    "generate",
    "jacobian",
    "kernel_value",
    "lipschitz_modulus",
    "maximal_function",
    "precise_representative",
    "riesz_potential",
    "run_config",
    "truncation_sets",
]
