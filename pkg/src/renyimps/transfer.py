"""Transfer operator of a translation-invariant MPS and its CP-map view.

Conventions: the transfer matrix is ``T = sum_i kron(A_i, conj(A_i))`` and
acts on row-major vectorizations, so ``T @ X.reshape(-1)`` equals
``(sum_i A_i X A_i^dagger).reshape(-1)``.  The Hilbert-Schmidt adjoint map
``X -> sum_i A_i^dagger X A_i`` then has matrix ``T.conj().T``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import DegenerateDominant, DimensionMismatch, NotGapped, NumericalFailure
from .mps import MpsTensor
from .spectral import TIE_TOL, SpectralData


def liouville_matrix(kraus) -> np.ndarray:
    """``sum_i kron(K_i, conj(K_i))`` for a stack of Kraus matrices."""
    K = np.asarray(kraus, dtype=complex)
    D = K.shape[1]
    return np.einsum("iac,ibd->abcd", K, K.conj()).reshape(D * D, D * D)


@dataclass(frozen=True, eq=False)
class TransferOperator:
    kraus: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False, compare=False)
    _spectral: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        K = np.array(self.kraus, dtype=complex)
        if K.ndim != 3 or K.shape[1] != K.shape[2]:
            raise DimensionMismatch(f"Kraus stack must have shape (d, D, D), got {K.shape}")
        K.setflags(write=False)
        T = liouville_matrix(K)
        T.setflags(write=False)
        object.__setattr__(self, "kraus", K)
        object.__setattr__(self, "matrix", T)
        object.__setattr__(self, "_lock", threading.Lock())
        object.__setattr__(self, "_spectral", [])

    @property
    def bond_dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def spectral(self) -> SpectralData:
        with self._lock:
            if not self._spectral:
                self._spectral.append(spectral.spectral_data(self.matrix))
            return self._spectral[0]

    def tensor(self) -> MpsTensor:
        return MpsTensor(self.kraus)

    def __repr__(self):
        return f"TransferOperator(D={self.bond_dim}, kraus={self.kraus.shape[0]})"


def build_transfer(tensor: MpsTensor) -> TransferOperator:
    return TransferOperator(tensor.matrices)


def apply_cp(T: TransferOperator, X, adjoint: bool = False) -> np.ndarray:
    """``sum_i A_i X A_i^dagger``, or ``sum_i A_i^dagger X A_i`` if ``adjoint``."""
    X = np.asarray(X, dtype=complex)
    D = T.bond_dim
    if X.shape != (D, D):
        raise DimensionMismatch(f"operand has shape {X.shape}, expected {(D, D)}")
    K = T.kraus
    if adjoint:
        return np.einsum("iba,bc,icd->ad", K.conj(), X, K)
    return np.einsum("iab,bc,idc->ad", K, X, K.conj())


def spectral_report(T: TransferOperator) -> SpectralData:
    return T.spectral


@dataclass(frozen=True, eq=False)
class CanonicalData:
    """Normalization and fixed points of a gapped transfer operator.

    ``t1`` is the dominant eigenvalue before normalization, ``p1`` the
    projector fixed by the normalized map, ``lambda1`` the trace-one fixed
    point of its adjoint and ``d1`` the rank of ``lambda1``, i.e. the
    dimension of the dominant block.  For tensors already in block-diagonal
    canonical form ``d1`` is also the rank of ``p1``; for block-triangular
    input ``p1`` can be larger because it also spans the off-diagonal part.
    """

    t1: float
    gap: float
    p1: np.ndarray
    lambda1: np.ndarray
    d1: int

    @property
    def lambda_min(self) -> float:
        ev = np.linalg.eigvalsh(self.lambda1)
        return float(ev[ev > 1e-10].min())


def _psd_part(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian part of ``X`` projected on its positive cone, plus eigen-data."""
    H = 0.5 * (X + X.conj().T)
    w, V = np.linalg.eigh(H)
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.conj().T, (w, V)


def _fixed_operator(vec: np.ndarray, D: int) -> np.ndarray:
    X = vec.reshape(D, D)
    tr = np.trace(X)
    if abs(tr) < 1e-14:
        raise NumericalFailure("dominant fixed operator has vanishing trace")
    # CP maps have a positive dominant fixed point; strip the global phase
    X = X * (abs(tr) / tr)
    return _psd_part(X)[0]


def _dominant(M: np.ndarray, tol: float):
    try:
        return spectral.dominant_eigenpair(M, tol)
    except DegenerateDominant as exc:
        mods = ", ".join(f"{m:.6g}" for m in exc.moduli[:6])
        raise NotGapped(f"transfer operator is not gapped; leading moduli {mods}",
                        moduli=exc.moduli) from exc


def canonicalize_primitive(tensor: MpsTensor, tol: float = TIE_TOL) -> tuple[MpsTensor, CanonicalData]:
    """Normalize and gauge-fix a gapped MPS tensor.

    With ``M >= 0`` the dominant right fixed point of the CP map and ``t1``
    its eigenvalue, returns ``A'_i = M^{-1/2} (A_i / sqrt(t1)) M^{1/2}``
    (pseudo-inverse on the support of ``M``).  The new map fixes the
    projector ``P1`` onto that support and its adjoint fixes ``Lambda1``.
    """
    T = build_transfer(tensor)
    D = T.bond_dim
    lam, vec = _dominant(T.matrix, tol)
    t1 = float(lam.real)
    if t1 <= 0 or abs(lam.imag) > 1e-8 * abs(lam):
        raise NumericalFailure(f"dominant eigenvalue {lam} is not real positive")
    M = _fixed_operator(vec, D)
    w, V = np.linalg.eigh(M)
    support = w > 1e-10 * w.max()
    ws, Vs = w[support], V[:, support]
    sqrt_m = (Vs * np.sqrt(ws)) @ Vs.conj().T
    isqrt_m = (Vs / np.sqrt(ws)) @ Vs.conj().T
    A = np.einsum("ab,ibc,cd->iad", isqrt_m, tensor.matrices / np.sqrt(t1), sqrt_m)
    p1 = Vs @ Vs.conj().T

    T_can = TransferOperator(A)
    _, left = _dominant(T_can.matrix.conj().T, tol)
    lam1 = _fixed_operator(left, D)
    lam1 = lam1 / np.trace(lam1).real
    w1 = np.linalg.eigvalsh(lam1)
    data = CanonicalData(
        t1=t1,
        gap=spectral.spectral_data(T.matrix, tol).gap,
        p1=p1,
        lambda1=lam1,
        d1=int(np.count_nonzero(w1 > 1e-10 * w1.max())),
    )
    return MpsTensor(A), data


def dominant_block(tensor: MpsTensor, tol: float = TIE_TOL) -> tuple[MpsTensor, np.ndarray, CanonicalData]:
    """Compression of the canonical tensor onto the support of ``Lambda1``.

    Returns ``(block, W, canon)`` with ``W`` (D x d1) an isometry onto that
    support.  The support is invariant under the adjoint Kraus operators, so
    ``W^dagger T[X] W = T_block[W^dagger X W]``; the block map is unital and
    its adjoint fixes the full-rank ``W^dagger Lambda1 W``.
    """
    A, canon = canonicalize_primitive(tensor, tol)
    w, V = np.linalg.eigh(canon.lambda1)
    W = V[:, w > 1e-10 * w.max()]
    block = np.einsum("ab,ibc,cd->iad", W.conj().T, A.matrices, W)
    return MpsTensor(block), W, canon


def normalized(T: TransferOperator, tol: float = TIE_TOL) -> TransferOperator:
    """``T`` rescaled so its dominant eigenvalue is 1; raises ``NotGapped``."""
    lam, _ = _dominant(T.matrix, tol)
    return TransferOperator(T.kraus / np.sqrt(abs(lam)))


def asymptotic_map_residual(T: TransferOperator, canon: CanonicalData, m: int) -> float:
    """``max_j || T^m[E_j] - P1 tr[Lambda1 E_j] ||_2`` over matrix units ``E_j``."""
    if not T.spectral.gapped:
        raise NotGapped("transfer operator is not gapped")
    Tm = np.linalg.matrix_power(T.matrix, m)
    # column (a, b) of the limit map is P1 * Lambda1[b, a]
    limit = np.outer(canon.p1.reshape(-1), canon.lambda1.T.reshape(-1))
    return float(np.linalg.norm(Tm - limit, axis=0).max())


def highest_eigvec_is_product(T: TransferOperator, tol: float = 1e-8) -> tuple[bool, np.ndarray]:
    """Schmidt coefficients of the highest eigenvector in canonical form.

    The eigenvector is taken from the transfer operator of the dominant
    block (see ``dominant_block``), so off-diagonal parts of a
    block-triangular tensor, which never reach the periodic state, do not
    count.  Coefficients are padded with zeros to length ``D``; the flag is
    true iff the second one is below ``tol``.
    """
    block, _, _ = dominant_block(T.tensor())
    d1 = block.bond_dim
    _, vec = _dominant(build_transfer(block).matrix, TIE_TOL)
    schmidt = np.zeros(T.bond_dim)
    schmidt[:d1] = np.linalg.svd(vec.reshape(d1, d1), compute_uv=False)
    return bool(schmidt[1] < tol) if T.bond_dim > 1 else True, schmidt
