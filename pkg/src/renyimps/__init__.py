"""Renyi entropy densities of every-k-th-spin subsystems of translation-invariant MPS,
and Kraus-rank bounds for quantum channels."""

from .channels import (
    BoundsReport,
    QuantumChannel,
    bounds_report,
    channel_to_mps,
    expansion_coefficient,
    kraus_rank,
    minimal_kraus,
    swap_singular_identity,
    t_hat,
)
from .errors import *  # noqa: F401,F403
from .mps import (
    MpsTensor,
    StateVector,
    expand_state,
    purity_oracle,
    reduced_density,
    renyi_entropy,
)
from .spectral import (
    SpectralData,
    dominant_eigenpair,
    eigenvalues_sorted,
    near_identity_power,
    singular_values,
    spectral_data,
)
from .transfer import (
    CanonicalData,
    TransferOperator,
    build_transfer,
    canonicalize_primitive,
    highest_eigvec_is_product,
)
from .twisted import (
    EntropyResult,
    build_twisted,
    density_limit_k,
    density_limit_km,
    entropy_density,
    purity_single_site,
    purity_via_transfer,
)

__version__ = "0.1.0"
