"""Latent component regression with several predictor groups: strong, nested
components per group, chosen to model a dependent group."""

from .criteria import (BetaGamma, CriterionContext, beta_gamma, build_context, c1, c4, c5, c5_sum, c6,
                       c6_partial_max, conditioned_criterion, pseudo_pvalues, r_squared, stars)
from .errors import (ConfigError, ConstantColumn, DegenerateComponent, InsufficientDof, MissingVariable,
                     NoConvergence, NoConvergenceWarning, NonNumericCell, NotSymmetric, NullCovariance,
                     SeerError, SingularBasis, UnknownComponent)
from .linalg import (EigenPair, Metric, WeightedDataset, Weights, largest_eigenvalue, make_metric,
                     max_gen_eig, project, standardize, total_inertia, triplet_pca)
from .pls import Component, ln_pls2, mra_components, pls1, pls1_rank1, q2_rank1, q3_rank1
from .report import FitResult, PlaneExport, export_plane, load_result, write_all
from .thematic import (A0Result, ConvergenceOptions, GroupSpec, ModelComponents, SelectionTrace,
                       ThematicModel, a0, a1, a2, a3, b1, b2, backward_select, criterion_ratio,
                       dependent_components, group_omega)

__version__ = "0.1.0"

__all__ = [
    'BetaGamma', 'CriterionContext', 'beta_gamma', 'build_context', 'c1', 'c4', 'c5', 'c5_sum', 'c6',
    'c6_partial_max', 'conditioned_criterion', 'pseudo_pvalues', 'r_squared', 'stars', 'ConfigError',
    'ConstantColumn', 'DegenerateComponent', 'InsufficientDof', 'MissingVariable', 'NoConvergence',
    'NoConvergenceWarning', 'NonNumericCell', 'NotSymmetric', 'NullCovariance', 'SeerError',
    'SingularBasis', 'UnknownComponent', 'EigenPair', 'Metric', 'WeightedDataset', 'Weights',
    'largest_eigenvalue', 'make_metric', 'max_gen_eig', 'project', 'standardize', 'total_inertia',
    'triplet_pca', 'Component', 'ln_pls2', 'mra_components', 'pls1', 'pls1_rank1', 'q2_rank1', 'q3_rank1',
    'FitResult', 'PlaneExport', 'export_plane', 'load_result', 'write_all', 'A0Result',
    'ConvergenceOptions', 'GroupSpec', 'ModelComponents', 'SelectionTrace', 'ThematicModel', 'a0', 'a1',
    'a2', 'a3', 'b1', 'b2', 'backward_select', 'criterion_ratio', 'dependent_components', 'group_omega',
]
