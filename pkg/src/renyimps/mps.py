"""Exact state-vector path for translation-invariant periodic MPS.

Everything here works on the full ``d**n`` amplitude vector and serves as
the reference against which the transfer-operator formulas are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadSiteList, BudgetExceeded, InvalidAlpha, InvariantViolation, ZeroState

#: Default cap on the number of amplitudes an exact expansion may allocate.
EXPANSION_BUDGET = 2 ** 20

#: Eigenvalues below this are treated as zero (rank, entropies, positivity).
EIG_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class MpsTensor:
    """Site tensor of a translation-invariant MPS with periodic boundary.

    ``matrices`` has shape ``(d, D, D)``; ``matrices[i]`` is the matrix
    attached to physical index ``i``.
    """

    matrices: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrices, dtype=complex)
        if A.ndim != 3 or A.shape[0] < 1 or A.shape[1] < 1 or A.shape[1] != A.shape[2]:
            raise InvariantViolation(f"site tensor must have shape (d, D, D), got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvariantViolation("site tensor has non-finite entries")
        if not np.any(A):
            raise InvariantViolation("site tensor is identically zero")
        A.setflags(write=False)
        object.__setattr__(self, "matrices", A)

    @property
    def phys_dim(self) -> int:
        return self.matrices.shape[0]

    @property
    def bond_dim(self) -> int:
        return self.matrices.shape[1]

    def __repr__(self):
        return f"MpsTensor(d={self.phys_dim}, D={self.bond_dim})"


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    d: int
    amplitudes: np.ndarray
    raw_norm_sq: float = 1.0


def _products(A: np.ndarray, length: int) -> np.ndarray:
    """All ordered products ``A[i1] @ ... @ A[i_length]``, shape (d**length, D, D)."""
    d, D, _ = A.shape
    out = np.broadcast_to(np.eye(D, dtype=complex), (1, D, D))
    for _ in range(length):
        out = np.einsum("aij,bjk->abik", out, A).reshape(-1, D, D)
    return out


def expand_state(tensor: MpsTensor, n: int, budget: int = EXPANSION_BUDGET) -> StateVector:
    """Amplitudes ``tr[A^{i1} ... A^{in}]`` of the periodic MPS on ``n`` sites.

    The returned vector has unit norm; ``raw_norm_sq`` is the squared norm
    before normalization, which equals ``tr[T**n]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d, D = tensor.phys_dim, tensor.bond_dim
    if d ** n > budget:
        raise BudgetExceeded(f"{d}**{n} amplitudes exceed the budget of {budget}")
    A = tensor.matrices
    # split the ring in two halves and glue them with one matrix product
    left = _products(A, n // 2).reshape(-1, D * D)
    right = _products(A, n - n // 2).transpose(0, 2, 1).reshape(-1, D * D)
    psi = (left @ right.T).reshape(-1)
    norm_sq = float(np.vdot(psi, psi).real)
    if not np.any(np.abs(psi) > 1e-14):
        raise ZeroState("all amplitudes vanish")
    return StateVector(n, d, psi / math.sqrt(norm_sq), norm_sq)


def _check_sites(sites, n: int) -> list[int]:
    s = [int(x) for x in sites]
    if not s:
        raise BadSiteList("site list is empty")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise BadSiteList(f"site list {s} is not strictly increasing")
    if s[0] < 1 or s[-1] > n:
        raise BadSiteList(f"sites must lie in 1..{n}, got {s}")
    return s


def reduced_density(state: StateVector, sites, budget: int = EXPANSION_BUDGET) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` onto ``sites`` (1-based, increasing)."""
    s = _check_sites(sites, state.n)
    d, n = state.d, state.n
    if d ** len(s) > budget:
        raise BudgetExceeded(f"reduced dimension {d}**{len(s)} exceeds the budget")
    keep = [i - 1 for i in s]
    rest = [i for i in range(n) if i not in set(keep)]
    psi = state.amplitudes.reshape((d,) * n).transpose(keep + rest)
    M = psi.reshape(d ** len(keep), -1)
    rho = M @ M.conj().T
    return 0.5 * (rho + rho.conj().T)


def validate_density(rho, tol: float = EIG_CUTOFF) -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a density matrix."""
    R = np.asarray(rho, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 1:
        raise InvariantViolation(f"density matrix must be square, got shape {R.shape}")
    if np.max(np.abs(R - R.conj().T)) > tol:
        raise InvariantViolation("density matrix is not Hermitian")
    if abs(np.trace(R) - 1) > tol:
        raise InvariantViolation(f"density matrix has trace {np.trace(R).real:.12g}")
    if np.linalg.eigvalsh(R)[0] < -tol:
        raise InvariantViolation("density matrix has a negative eigenvalue")
    return R


def renyi_entropy(rho, alpha: float) -> float:
    """Renyi-``alpha`` entropy in nats.

    ``alpha`` may be 0 (log rank), 1 (von Neumann) or ``math.inf``
    (min-entropy).  Eigenvalues are clipped at zero before powering.
    """
    if alpha is None or not (alpha >= 0):
        raise InvalidAlpha(f"alpha must be >= 0, got {alpha!r}")
    R = validate_density(rho)
    p = np.clip(np.linalg.eigvalsh(0.5 * (R + R.conj().T)), 0.0, None)
    if alpha == 0:
        return math.log(int(np.count_nonzero(p > EIG_CUTOFF)))
    if alpha == 1:
        q = p[p > 0]
        return float(-np.sum(q * np.log(q)))
    if math.isinf(alpha):
        return -math.log(p.max())
    q = p[p > EIG_CUTOFF] if alpha < 1 else p
    return math.log(np.sum(q ** alpha)) / (1.0 - alpha)


def every_kth_site(n: int, k: int) -> list[int]:
    """Sites ``k, 2k, ..., n`` (1-based) of the every-k-th-spin subsystem."""
    if k < 1 or n % k:
        raise ValueError(f"k={k} must be a positive divisor of n={n}")
    return list(range(k, n + 1, k))


def purity_oracle(tensor: MpsTensor, n: int, k: int, l: int,
                  budget: int = EXPANSION_BUDGET) -> float:
    """``tr[rho_k**l]`` for the every-k-th-spin subsystem, by full expansion."""
    if l < 2:
        raise ValueError("order l must be >= 2")
    sites = every_kth_site(n, k)
    rho = reduced_density(expand_state(tensor, n, budget), sites, budget)
    p = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    return float(np.sum(p ** l))
