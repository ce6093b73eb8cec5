"""Dense complex linear algebra used by every other module.

Eigenvalues of non-normal matrices come from LAPACK ``geev`` (Hessenberg
reduction followed by the Schur QR iteration); eigenvectors are only formed
when a caller asks for them.  All functions are pure.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BudgetExceeded,
    DegenerateDominant,
    InputNotOnCircle,
    NonSquare,
    NumericalFailure,
)

#: Relative modulus-tie tolerance.  The same knob decides sort ties and the
#: gapped / non-gapped verdict everywhere in the package.
TIE_TOL = 1e-9


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite 2-d complex array, or raise ``ValueError``."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _as_square(M) -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise NonSquare(f"matrix of shape {A.shape} is not square")
    return A


def _sort_order(values: np.ndarray, tol: float) -> np.ndarray:
    """Indices sorting ``values`` by non-increasing modulus.

    Moduli within ``tol * max|value|`` of each other count as tied; ties are
    broken by descending real part, then descending imaginary part.
    """
    mods = np.abs(values)
    scale = tol * max(float(mods.max(initial=0.0)), np.finfo(float).tiny)

    def cmp(i, j):
        if abs(mods[i] - mods[j]) > scale:
            return -1 if mods[i] > mods[j] else 1
        for a, b in ((values[i].real, values[j].real), (values[i].imag, values[j].imag)):
            if abs(a - b) > scale:
                return -1 if a > b else 1
        return 0

    # pre-sort by modulus so the tolerant comparator sees near-sorted input
    rough = sorted(range(len(values)), key=lambda i: -mods[i])
    return np.array(sorted(rough, key=functools.cmp_to_key(cmp)), dtype=int)


def eigenvalues_sorted(M, tol: float = TIE_TOL) -> np.ndarray:
    """All eigenvalues of the square matrix ``M`` with multiplicity.

    Sorted by non-increasing modulus; modulus ties (relative ``tol``) are
    ordered by real part, then imaginary part, both descending.
    """
    A = _as_square(M)
    try:
        vals = scipy.linalg.eigvals(A, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"eigenvalue solver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise NumericalFailure("eigenvalue solver returned non-finite values")
    return vals[_sort_order(vals, tol)]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    j = int(np.argmax(np.abs(v)))
    return v * (abs(v[j]) / v[j])


def dominant_eigenpair(M, tol: float = TIE_TOL) -> tuple[complex, np.ndarray]:
    """Dominant eigenvalue and unit eigenvector of ``M``.

    The eigenvector phase is fixed so its largest-modulus entry is real and
    positive.  Raises ``DegenerateDominant`` when the two leading moduli agree
    within ``tol`` (relative).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _as_square(M)
    try:
        vals, vecs = scipy.linalg.eig(A, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"eigen-decomposition failed: {exc}") from exc
    order = _sort_order(vals, tol)
    vals, vecs = vals[order], vecs[:, order]
    lam = complex(vals[0])
    if len(vals) > 1 and abs(lam) - abs(vals[1]) <= tol * abs(lam):
        raise DegenerateDominant(
            f"leading moduli {abs(lam):.3e} and {abs(vals[1]):.3e} coincide",
            moduli=np.abs(vals),
        )
    v = _fix_phase(vecs[:, 0])
    norm_m = np.linalg.norm(A, 2)
    resid = np.linalg.norm(A @ v - lam * v)
    if resid > tol * norm_m:
        # a few steps of shifted inverse iteration usually clean up a
        # poorly conditioned eigenvector
        shift = lam + 1e3 * np.finfo(float).eps * max(norm_m, 1.0)
        lu = scipy.linalg.lu_factor(A - shift * np.eye(len(A)))
        for _ in range(3):
            v = _fix_phase(scipy.linalg.lu_solve(lu, v))
            lam = complex(np.vdot(v, A @ v))
        resid = np.linalg.norm(A @ v - lam * v)
        if resid > tol * norm_m:
            raise NumericalFailure(f"dominant eigenvector residual {resid:.2e} too large")
    return lam, v


def singular_values(M) -> np.ndarray:
    """Singular values, non-increasing, ``min(rows, cols)`` of them."""
    A = as_matrix(M)
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD failed: {exc}") from exc


def trace_power(M, n: int) -> complex:
    """``tr[M**n]`` evaluated as the n-th power sum of the eigenvalues."""
    if n < 1:
        raise ValueError("n must be >= 1")
    vals = eigenvalues_sorted(M)
    return complex(np.sum(vals ** n))


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    gap: float
    singular_gap: float

    @property
    def gapped(self) -> bool:
        return self.gap > TIE_TOL


def spectral_data(M, tol: float = TIE_TOL) -> SpectralData:
    """Eigenvalues, singular values, spectral gap and singular gap of ``M``.

    Missing second eigen/singular values (1x1 input) count as zero.
    """
    ev = eigenvalues_sorted(M, tol)
    sv = singular_values(M)
    m1 = abs(ev[0])
    m2 = abs(ev[1]) if len(ev) > 1 else 0.0
    if m1 > 0 and m1 - m2 > tol * m1:
        gap = (m1 - m2) / m1
    else:
        gap = 0.0
    s2 = sv[1] if len(sv) > 1 else 0.0
    return SpectralData(ev, sv, float(gap), float(sv[0] - s2))


def near_identity_power(zs, n: int, eps: float) -> int:
    """Smallest ``N >= n`` with ``|z**N - 1| < eps`` for every ``z`` in ``zs``.

    Plain forward search.  The existence argument via simultaneous Dirichlet
    approximation guarantees a hit with ``N <= ceil((4*pi/eps)**d) * n``; the
    search stops there with ``BudgetExceeded``.
    """
    z = np.atleast_1d(np.asarray(zs, dtype=complex))
    if n < 1 or eps <= 0:
        raise ValueError("need n >= 1 and eps > 0")
    if np.any(np.abs(np.abs(z) - 1.0) > 1e-12):
        raise InputNotOnCircle("all numbers must have unit modulus")
    if z.size == 0:
        return n
    theta = np.angle(z) / (2 * np.pi)
    budget = math.ceil(max((4 * math.pi / eps) ** z.size, 1.0)) * n
    for N in range(n, n + budget + 1):
        # reduce the phase before exponentiating to keep |z**N| on the circle
        frac = np.mod(N * theta, 1.0)
        if np.all(np.abs(np.exp(2j * np.pi * frac) - 1.0) < eps):
            return N
    raise BudgetExceeded(f"no N in [{n}, {n + budget}] brings all powers within {eps}")
