"""Spectral node and edge descriptors for weighted graph matching."""

from .graph import (
    GroundTruth,
    WeightedGraph,
    adjacency,
    gen_erdos_renyi,
    gen_matching_pair,
    laplacian,
    permute,
    perturb_gaussian,
)
from .matching import (
    AffinityMatrix,
    MatchResult,
    accuracy,
    bipartite_signature_match,
    build_affinity,
    discretize,
    hungarian,
    iqp_match,
    rrwm,
    sinkhorn_normalize,
)
from .spectral import (
    EigenDecomposition,
    SignatureSet,
    dvs_signature,
    eig_sym,
    heat_kernel_matrix,
    kernel_eval,
    laplacian_eig,
    lfs,
    make_kernel,
    pairwise_hkd,
    sig_distance,
    signature_distance_matrix,
)

__version__ = "0.1.0"
