"""Global collars and bicollars assembled from local collars, with sampled Lipschitz certification."""
from .bicollar import (Bicollar, bicollar_epsilon, epsilon_binding, glue_bicollar, midpoint_alpha,
                       midpoint_check, orient_bicollar, pasting_check, restrict_bicollar)
from .collar import (CollarValidationError, GlobalCollar, LocalCollar, build_global_collar, push_map,
                     restrict_collar, trajectories, xi_transform)
from .covers import (Cover, NotACoverError, PartitionOfUnity, build_pou, compute_order, estimate_lebesgue,
                     greedy_maximal_net, net_constants)
from .curves import Arc, CircleCurve, Polyline
from .fixtures import (load_fixture, make_circle_in_disk, make_net_segment, make_square_boundary,
                       make_strip_two_collar)
from .lipschitz import (ConstantBundle, LipschitzReport, collar_bound_iL, collar_bound_L, estimate_inverse_lipschitz,
                        estimate_lipschitz, estimate_zeta, overlap_chain_count, verify)
from .metric import MetricDomain, dist_to_set, product_distance, quasi_random_sample

__all__ = [
    "Arc", "Bicollar", "CircleCurve", "CollarValidationError", "ConstantBundle", "Cover", "GlobalCollar",
    "LipschitzReport", "LocalCollar", "MetricDomain", "NotACoverError", "PartitionOfUnity", "Polyline",
    "bicollar_epsilon", "build_global_collar", "build_pou", "collar_bound_L", "collar_bound_iL",
    "compute_order", "dist_to_set", "epsilon_binding", "estimate_inverse_lipschitz", "estimate_lebesgue",
    "estimate_lipschitz", "estimate_zeta", "glue_bicollar", "greedy_maximal_net", "load_fixture",
    "make_circle_in_disk", "make_net_segment", "make_square_boundary", "make_strip_two_collar",
    "midpoint_alpha", "midpoint_check", "net_constants", "orient_bicollar", "overlap_chain_count",
    "pasting_check", "product_distance", "push_map", "quasi_random_sample", "restrict_bicollar",
    "restrict_collar", "trajectories", "verify", "xi_transform",
]
