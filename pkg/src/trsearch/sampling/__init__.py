from trsearch.sampling.perturb import (
    LENGTH_CAPS,
    MaskConfig,
    Perturbation,
    affine_map,
    draw_mask,
    gaussian_perturbation,
    gaussian_std,
    probability_cap,
    propose_candidate,
)
from trsearch.sampling.sobol import (
    DimensionError,
    DirectionTable,
    SobolEngine,
    load_direction_numbers,
    parse_direction_numbers,
    sobol_unit_point,
)

__all__ = [
    "LENGTH_CAPS",
    "DimensionError",
    "DirectionTable",
    "MaskConfig",
    "Perturbation",
    "SobolEngine",
    "affine_map",
    "draw_mask",
    "gaussian_perturbation",
    "gaussian_std",
    "load_direction_numbers",
    "parse_direction_numbers",
    "probability_cap",
    "propose_candidate",
    "sobol_unit_point",
]
