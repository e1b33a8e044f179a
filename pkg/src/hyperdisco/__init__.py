"""Sparse discovery of hyperelastic constitutive models with LASSO, LARS and
OMP paths selected by AIC, BIC or K-fold cross validation."""

from .assembly import RegressionSystem, assemble, back_transform, mode_weights
from .data import Dataset, GroundTruth, ModeBlock, NoiseSpec, generate_synthetic, load_csv, load_treloar, save_csv
from .errors import (
    ConfigurationError,
    ContractViolation,
    DegenerateError,
    DiscoveryError,
    DomainError,
    ParseError,
)
from .kinematics import LoadingMode, ModeKind, StructuralFrame, deformation_gradient, invariants
from .library import (
    BasisTerm,
    ModelLibrary,
    check_consistency,
    energy,
    make_isotropic_library,
    make_orthotropic_library,
    stress_contribution,
)
from .pipeline import RunConfig, benchmark, run_discovery
from .refine import DiscoveredModel, evaluate_metrics, refit_linear, refit_nonlinear
from .selection import aic, bic, kfold_cv, select
from .solvers import lars_path, lasso_path, omp_path

__version__ = "0.1.0"
