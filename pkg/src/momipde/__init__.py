"""Multiobjective matrix-inequality design: an interior-point
eigenvalue-bound solver for the inner matrix variables, a hybrid
differential-evolution search over the outer design parameters, and
closed-loop RK4 simulation of the resulting controllers."""

from ._kernels import BACKEND
from .hmode import (Archive, ArchiveEntry, EmptyArchive, HmodeConfig,
                    HmodeOutput, archive_update, knee_score, knee_select, run)
from .lmi import (AffineBlock, ConstraintSystem, EvpResult, Status,
                  VariableLayout, evaluate, extract, is_strictly_feasible,
                  pack, solve_evp, sym_coord)
from .matrixcore import (NotPositiveDefinite, NumericalFailure,
                         SymmetricMatrix, block_diag, cholesky, determinant,
                         is_positive_definite, max_eigenvalue, solve_spd,
                         sym_eigenvalues)
from .momip import (CandidateEvaluation, Dominance, Momip,
                    brute_force_pareto, dominates, evaluate_candidate)
from .problems import (BiboPlant, GainSet, RobustFuzzyPlant, bibo_plant,
                       build_example1, build_example2, example1_momip,
                       example2_momip, load_plant, lorenz_fuzzy_plant,
                       recover_gains)
from .sim import (Diverged, SimConfig, SimResult, Undefined, l2_gain_ratio,
                  membership, rk4_step, simulate_bibo, simulate_lorenz,
                  write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [
    "AffineBlock", "Archive", "ArchiveEntry", "BACKEND", "BiboPlant",
    "CandidateEvaluation", "ConstraintSystem", "Diverged", "Dominance",
    "EmptyArchive", "EvpResult", "GainSet", "HmodeConfig", "HmodeOutput",
    "Momip", "NotPositiveDefinite", "NumericalFailure", "RobustFuzzyPlant",
    "SimConfig", "SimResult", "Status", "SymmetricMatrix", "Undefined",
    "VariableLayout", "archive_update", "bibo_plant", "block_diag",
    "brute_force_pareto", "build_example1", "build_example2", "cholesky",
    "determinant", "dominates", "evaluate", "evaluate_candidate",
    "example1_momip", "example2_momip", "extract", "is_positive_definite",
    "is_strictly_feasible", "knee_score", "knee_select", "l2_gain_ratio",
    "load_plant", "lorenz_fuzzy_plant", "max_eigenvalue", "membership",
    "pack", "recover_gains", "rk4_step", "run", "simulate_bibo",
    "simulate_lorenz", "solve_evp", "solve_spd", "sym_coord",
    "sym_eigenvalues", "write_trajectory_csv", "__version__",
]
