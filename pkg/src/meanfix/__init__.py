"""Mean nonexpansive mappings: product-space constructions, afps iterations and checks."""

from .spaces import BallDomain, as_product_point, as_seqvec, convex_combine, in_ball, lp_norm, product_norm
from .mappings import (
    JMap,
    LipschitzEstimate,
    MappingHandle,
    MultiIndex,
    collapse_zero_weights,
    estimate_lipschitz,
    iterate,
    j_map,
    t_alpha,
    tau_alpha,
    tilde_t,
)
from .sampling import PairSampler
from .examples import baseline_maps, get_example
from .afps import anchored_afps, gjp_chain_check, km_iterate, residual_family

__version__ = "0.1.0"
