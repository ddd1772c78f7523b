"""
Similarity-deformed position and momentum operators on a Hermite basis.

``q = T q0 T^-1`` and ``p = T p0 T^-1`` for an invertible map T, their
distributional eigenfamilies, and a check suite for the identities they
satisfy. Two concrete maps are provided: a rank-one perturbation of the
identity and convolution with the Green function of ``1 - i p0^2``.
"""
from .battery import Battery, default_battery
from .deformation import (
    DeformedPair,
    IdentityMap,
    SimilarityMap,
    dual_apply,
    eigen_p,
    eigen_q,
    make_deformed,
    metric_apply,
    smeared_state,
    weak_eigen_residual,
)
from .distributions import (
    Delta,
    DeltaDeriv,
    LinearComb,
    PlaneWave,
    Regular,
    convolve_with_test,
    extended_inner,
    pair,
)
from .errors import (
    BasisMismatchError,
    BiorthoError,
    BoundaryLeakageError,
    ConstructionError,
    NonFiniteSampleError,
    SpillError,
    UnsupportedDistributionError,
)
from .green import GreenMap, eigen_q_closed
from .rankone import RankOneMap, deformed_action_closed, delta_term, quasi_basis
from .spectral import (
    HermiteBasis,
    QuadratureRule,
    TestFunction,
    apply_p0,
    apply_q0,
    decay_metric,
    gauss_hermite,
    inner,
    project,
    uniform_grid,
)
from .verifier import CheckResult, VerificationReport, check_delta_kernel, check_quasi_basis, run_suite

__version__ = "0.1.0"
