"""Mauldin-Williams graphs, their invariant lists, and the Cuntz-Krieger side at finite depth."""

from .affine import AffineMap, certified_spectral_norm
from .ckalgebra import (CKElement, CKMonomial, DiagonalElement, Word, ck_difference, ck_equal,
                        ck_identity_check, covariance_defect, diag_norm, empty_word, hom_defect,
                        ia_approx, ia_gap, ideal_norms, monomial_mul, multiply, refine,
                        vertex_expand, word)
from .correspondence import (CorrElement, RankOnePair, basis_delta, inner_product, ix_approx,
                             left_action, phi_decompose, rank_one_apply, right_action,
                             toeplitz_defect)
from .graph import (Graph, GraphError, ValidationReport, condition_L, edge_matrix,
                    longest_common_prefix, path_metric, paths_of_length, validate_graph)
from .lipschitz import LipError, LipFunction, eval_lip, parse_expr
from .metric import PointCloud, box_net, diameter, hausdorff_distance, thin
from .states import (DiscreteMeasure, corner_family, dirac_family, eval_state, pi_eval, pushforward,
                     state_diameter, state_hutchinson_step, w1)
from .system import (ConvergenceError, DomainError, MWGraph, SystemFormatError, chaos_game,
                     coding_point, invariant_list, lip_compose, load_fixture, validate_mw)
from .transport import transport

__version__ = "0.1.0"

__all__ = [
    "AffineMap", "certified_spectral_norm", "CKElement", "CKMonomial", "DiagonalElement",
    "Word", "ck_difference", "ck_equal", "ck_identity_check", "covariance_defect", "diag_norm",
    "empty_word", "hom_defect", "ia_approx", "ia_gap", "ideal_norms", "monomial_mul",
    "multiply", "refine", "vertex_expand", "word", "CorrElement", "RankOnePair", "basis_delta",
    "inner_product", "ix_approx", "left_action", "phi_decompose", "rank_one_apply",
    "right_action", "toeplitz_defect", "Graph", "GraphError", "ValidationReport", "condition_L",
    "edge_matrix", "longest_common_prefix", "path_metric", "paths_of_length", "validate_graph",
    "LipError", "LipFunction", "eval_lip", "parse_expr", "PointCloud", "box_net", "diameter",
    "hausdorff_distance", "thin", "DiscreteMeasure", "corner_family", "dirac_family",
    "eval_state", "pi_eval", "pushforward", "state_diameter", "state_hutchinson_step", "w1",
    "ConvergenceError", "DomainError", "MWGraph", "SystemFormatError", "chaos_game",
    "coding_point", "invariant_list", "lip_compose", "load_fixture", "validate_mw", "transport",
]
