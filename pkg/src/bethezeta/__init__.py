"""Loopy belief propagation, the Bethe free energy, graph zeta functions,
loop-series expansions and deletion-contraction graph polynomials on
discrete factor graphs, with brute-force oracles for every identity.
"""

__version__ = "0.1.0"

from .graphs import (FactorGraph, Graph, bouquet_graph, complete_graph,
                     contract_edge, core, cycle_graph, delete_contract,
                     delete_edge, dumbbell_graph, nullity, path_graph,
                     spanning_tree_count, subdivide, theta_graph)
from .models import (BinaryPairwiseModel, BinaryPseudomarginals,
                     DiscreteModel, MultinomialPseudomarginals, attractive,
                     correlation_data, frustrated_nullity2_class)
from .exact import (ExactSummary, brute_force, enumerate_perfect_matchings,
                    gibbs_free_energy, tree_covariance_chain)
from .lbp import (Beliefs, LbpRunReport, MessageSet, bethe_free_energy,
                  lbp_linearization, lbp_update, run_lbp)
from .zeta import (EdgeWeightAssignment, GraphEdgeWeights, ZetaReport,
                   det_m_closed_form, directed_edge_matrix,
                   hashimoto_limit_check, zeta_first_determinant,
                   zeta_ihara_bass)
from .bethe import (BetheZetaReport, FixedPointCatalog, HessianReport,
                    bethe_hessian, index_sum_audit, mooij_uniqueness,
                    nullity2_uniqueness, pd_region_certificate,
                    stability_classify, verify_bethe_zeta)
from .loopseries import (LoopSeriesReport, enumerate_sub_coregraphs, f_poly,
                         g_poly, loop_series_marginal, loop_series_z,
                         matching_bethe_solve, matching_loop_series)
from .graphpoly import (omega, theta_bivariate, theta_multivariate,
                        tutte_polynomial)
from .polynomial import Poly, Poly2
