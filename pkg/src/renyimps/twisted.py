"""Twisted transfer operators and Renyi entropy densities of every-k-th-spin subsystems.

For order ``l`` and period ``k`` the twisted operator is

    (T^{(x)l})^{k-1} U_l^{-1} T^{(x)l} U_l

on ``l`` copies of the doubled bond space, where ``U_l`` cyclically shifts
the conjugate (even-position) bond factors.  Its dominant eigenvalue gives
the Renyi-l density of the subsystem made of every k-th spin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import BudgetExceeded, NumericalFailure, ZeroState
from .mps import MpsTensor
from .spectral import TIE_TOL
from .transfer import CanonicalData, TransferOperator, build_transfer, canonicalize_primitive, normalized

#: Largest dense twisted-operator dimension ``D**(2l)`` we agree to build.
TWIST_BUDGET = 2 ** 12
SQUARING_MAX_POWER = 64


def _permutation_matrix(D: int, src: list[int]) -> np.ndarray:
    """Matrix sending factor ``src[p]`` of the input to position ``p`` of the output."""
    f = len(src)
    idx = np.indices((D,) * f).reshape(f, -1)
    out = np.ravel_multi_index(idx[src], (D,) * f)
    P = np.zeros((D ** f, D ** f))
    P[out, np.arange(D ** f)] = 1.0
    return P


@dataclass(frozen=True, eq=False)
class SwapOperators:
    l: int
    D: int
    shift: np.ndarray
    partial_swap: np.ndarray


def build_swaps(l: int, D: int, budget: int = TWIST_BUDGET) -> SwapOperators:
    """Cyclic shift on ``l`` bond factors and the partial swap on ``2l`` factors.

    The shift maps ``|p1 p2 ... pl>`` to ``|p2 ... pl p1>``.  The partial swap
    leaves the odd factors alone and applies the shift to the even ones, so
    for ``l = 2`` it maps ``|p1 p2 p3 p4>`` to ``|p1 p4 p3 p2>``.
    """
    if l < 2 or D < 1:
        raise ValueError("need l >= 2 and D >= 1")
    if D ** (2 * l) > budget:
        raise BudgetExceeded(f"dense dimension {D}**{2 * l} exceeds the budget of {budget}")
    shift = _permutation_matrix(D, [(p + 1) % l for p in range(l)])
    src = []
    for p in range(2 * l):
        if p % 2 == 0:
            src.append(p)
        else:
            j = p // 2
            src.append(2 * ((j + 1) % l) + 1)
    return SwapOperators(l, D, shift, _permutation_matrix(D, src))


@dataclass(frozen=True, eq=False)
class TwistedOperator:
    l: int
    k: int
    D: int
    matrix: np.ndarray
    dominant: complex


def _twisted_matrix(T: np.ndarray, D: int, k: int, l: int, budget: int) -> np.ndarray:
    if k < 1:
        raise ValueError("period k must be >= 1")
    U = build_swaps(l, D, budget).partial_swap
    # U is a permutation matrix, so U^T M U is a reindexing of M
    idx = U.argmax(axis=0)
    twisted = _kron_power(T, l)[np.ix_(idx, idx)]
    if k > 1:
        twisted = _kron_power(np.linalg.matrix_power(T, k - 1), l) @ twisted
    return twisted


def _kron_power(M: np.ndarray, l: int) -> np.ndarray:
    out = M
    for _ in range(l - 1):
        out = np.kron(out, M)
    return out


def build_twisted(T: TransferOperator, k: int, l: int = 2, budget: int = TWIST_BUDGET) -> TwistedOperator:
    """Dense twisted transfer operator of order ``l`` and period ``k``."""
    M = _twisted_matrix(T.matrix, T.bond_dim, k, l, budget)
    return TwistedOperator(l, k, T.bond_dim, M, complex(spectral.eigenvalues_sorted(M)[0]))


def _unit_scaled(tensor: MpsTensor) -> TransferOperator:
    # the purity ratio is scale invariant; unit spectral radius keeps powers O(1)
    T = build_transfer(tensor)
    rho = abs(spectral.eigenvalues_sorted(T.matrix)[0])
    if rho == 0:
        raise ZeroState("transfer operator is nilpotent; the MPS vanishes")
    return TransferOperator(T.kraus / math.sqrt(rho))


def _trace_of_power(M: np.ndarray, p: int) -> complex:
    # repeated squaring for short powers: cheaper than a dense eigensolve and
    # exact for defective matrices; long powers go through the spectrum
    if p <= SQUARING_MAX_POWER:
        return complex(np.trace(np.linalg.matrix_power(M, p)))
    return spectral.trace_power(M, p)


def purity_via_transfer(tensor: MpsTensor, n: int, k: int, l: int = 2,
                        budget: int = TWIST_BUDGET) -> float:
    """Exact ``tr[rho_k**l]`` at finite ``n`` from traces of transfer powers."""
    if k < 1 or n % k:
        raise ValueError(f"k={k} must be a positive divisor of n={n}")
    T = _unit_scaled(tensor)
    twisted = _twisted_matrix(T.matrix, T.bond_dim, k, l, budget)
    num = _trace_of_power(twisted, n // k)
    den = _trace_of_power(T.matrix, n)
    if abs(den) == 0:
        raise ZeroState(f"the MPS vanishes on {n} sites")
    value = num / den ** l
    if abs(value.imag) > 1e-8 * max(abs(value), 1.0):
        raise NumericalFailure(f"purity has imaginary residue {value.imag:.2e}")
    return float(value.real)


def purity_single_site(tensor: MpsTensor, n: int, budget: int = TWIST_BUDGET) -> float:
    """``tr[rho_site**2]`` for any single site of the ``n``-site ring."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return purity_via_transfer(tensor, n, n, 2, budget)


def finite_density_sequence(tensor: MpsTensor, k: int, l: int, ns) -> list[tuple[int, float]]:
    """Pairs ``(n, (k/n) S_l(rho_k))`` at finite sizes, whose liminf is the density."""
    out = []
    for n in ns:
        p = purity_via_transfer(tensor, n, k, l)
        out.append((n, (k / n) * -math.log(p) / (l - 1)))
    return out


@dataclass(frozen=True)
class EntropyResult:
    k: int
    l: int
    m: int
    density: float
    t_hat: complex
    gap: float


def entropy_density(T: TransferOperator, k: int, l: int = 2, m: int = 1,
                    budget: int = TWIST_BUDGET) -> EntropyResult:
    """Renyi-l entropy density per group of ``m`` sites for every k-th group.

    Equals ``-log|t| / (l-1)`` with ``t`` the dominant eigenvalue of the
    twisted operator built from the normalized ``T**m``.
    """
    if m < 1:
        raise ValueError("block size m must be >= 1")
    Tn = normalized(T).matrix
    gap = T.spectral.gap
    twisted = _twisted_matrix(np.linalg.matrix_power(Tn, m), T.bond_dim, k, l, budget)
    t_hat = complex(spectral.eigenvalues_sorted(twisted)[0])
    mod = abs(t_hat)
    if mod > 1 + 1e-8:
        raise NumericalFailure(f"twisted eigenvalue modulus {mod:.12g} exceeds 1")
    density = 0.0 if mod >= 1.0 else -math.log(mod) / (l - 1)
    return EntropyResult(k, l, m, density, t_hat, gap)


def apply_tensor_power(T: TransferOperator, X: np.ndarray, l: int) -> np.ndarray:
    """Apply the l-fold tensor power of the CP map to an operator on ``(C^D)^l``."""
    D = T.bond_dim
    T4 = T.matrix.reshape(D, D, D, D)
    Y = np.asarray(X, dtype=complex).reshape((D,) * (2 * l))
    for j in range(l):
        Y = np.tensordot(T4, Y, axes=([2, 3], [j, l + j]))
        # tensordot puts the new (row, col) pair first; move it back into place
        Y = np.moveaxis(Y, [0, 1], [j, l + j])
    return Y.reshape(D ** l, D ** l)


def twisted_limit_eigenvalue(T: TransferOperator, canon: CanonicalData, l: int = 2) -> complex:
    """``tr[Lambda1^{(x)l} T^{(x)l}[s] s^dagger]`` for a canonical ``T``."""
    D = T.bond_dim
    if D ** (2 * l) > TWIST_BUDGET:
        raise BudgetExceeded(f"operator dimension {D}**{l} squared exceeds the budget")
    s = build_swaps(l, D).shift
    lam = _kron_power(canon.lambda1, l)
    return complex(np.trace(lam @ apply_tensor_power(T, s, l) @ s.conj().T))


def density_limit_k(T: TransferOperator, l: int = 2) -> float:
    """Large-k limit of the Renyi-l density; canonicalizes ``T`` first."""
    A, canon = canonicalize_primitive(T.tensor())
    t = twisted_limit_eigenvalue(build_transfer(A), canon, l)
    return -math.log(abs(t)) / (l - 1)


def density_limit_km(canon: CanonicalData, l: int = 2) -> float:
    """Large-k, large-block limit ``2 S_l(Lambda1)``."""
    p = np.clip(np.linalg.eigvalsh(canon.lambda1), 0.0, None)
    return -2.0 * math.log(np.sum(p ** l)) / (l - 1)
