"""Carleman-linearised lattice Boltzmann emulation and block-encoding circuits."""
from .errors import ResourceLimitError
from .lattice import (DistributionField, LatticeModel, MacroFields, ReynoldsReport, equilibrium,
                      kolmogorov_init, lbm_step, make_model, reynolds_report)
from .sparse import SparseMatrix
from .carleman import (CarlemanState, CarlemanSystem, ErrorStats, build_relaxation, build_streaming,
                       carleman_step, collision_matrices, compare_to_lbm, fast_second_order_path, lift,
                       single_site_relaxation)

__all__ = [
    "ResourceLimitError", "DistributionField", "LatticeModel", "MacroFields", "ReynoldsReport",
    "equilibrium", "kolmogorov_init", "lbm_step", "make_model", "reynolds_report", "SparseMatrix",
    "CarlemanState", "CarlemanSystem", "ErrorStats", "build_relaxation", "build_streaming",
    "carleman_step", "collision_matrices", "compare_to_lbm", "fast_second_order_path", "lift",
    "single_site_relaxation",
]
