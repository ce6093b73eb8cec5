"""Quantum-channel audit: Kraus rank, expansion coefficient, singular gap,
the k -> infinity twisted eigenvalue and the Kraus-rank bounds relating them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import spectral
from .errors import InvariantViolation, NotGapped, NotPrimitive
from .mps import MpsTensor
from .transfer import (
    TransferOperator,
    _dominant,
    _fixed_operator,
    build_transfer,
    canonicalize_primitive,
    dominant_block,
)
from .twisted import twisted_limit_eigenvalue

FLAG_TOL = 1e-9


def _full_rank(X: np.ndarray, tol: float = FLAG_TOL) -> bool:
    w = np.linalg.eigvalsh(X)
    return bool(w[0] > tol * w[-1])


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CP map ``X -> sum_i K_i X K_i^dagger`` given by its Kraus operators.

    The ``unital``, ``trace_preserving`` and ``primitive`` flags are always
    recomputed from ``kraus``.
    """

    kraus: np.ndarray
    unital: bool = field(init=False)
    trace_preserving: bool = field(init=False)
    primitive: bool = field(init=False)

    def __post_init__(self):
        K = np.array(self.kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[1] != K.shape[2] or K.shape[0] < 1:
            raise InvariantViolation(f"Kraus stack must have shape (r, D, D), got {K.shape}")
        if not np.all(np.isfinite(K)) or not np.any(K):
            raise InvariantViolation("Kraus operators must be finite and not all zero")
        K.setflags(write=False)
        object.__setattr__(self, "kraus", K)
        eye = np.eye(K.shape[1])
        unital = np.abs(np.einsum("iab,icb->ac", K, K.conj()) - eye).max() <= FLAG_TOL
        tp = np.abs(np.einsum("iba,ibc->ac", K.conj(), K) - eye).max() <= FLAG_TOL
        object.__setattr__(self, "unital", bool(unital))
        object.__setattr__(self, "trace_preserving", bool(tp))
        object.__setattr__(self, "primitive", self._check_primitive())

    def _check_primitive(self) -> bool:
        T = self.transfer().matrix
        D = self.dim
        try:
            _, right = _dominant(T, spectral.TIE_TOL)
            _, left = _dominant(T.conj().T, spectral.TIE_TOL)
        except NotGapped:
            return False
        return _full_rank(_fixed_operator(right, D)) and _full_rank(_fixed_operator(left, D))

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def transfer(self) -> TransferOperator:
        return TransferOperator(self.kraus)

    def __call__(self, X) -> np.ndarray:
        return np.einsum("iab,bc,idc->ad", self.kraus, np.asarray(X, dtype=complex), self.kraus.conj())

    def __repr__(self):
        return (f"QuantumChannel(D={self.dim}, kraus={self.kraus.shape[0]}, unital={self.unital}, "
                f"tp={self.trace_preserving}, primitive={self.primitive})")


def choi_matrix(ch: QuantumChannel) -> np.ndarray:
    vecs = ch.kraus.reshape(ch.kraus.shape[0], -1)
    return vecs.T @ vecs.conj()


def kraus_rank(ch: QuantumChannel, tol: float = FLAG_TOL) -> int:
    """Rank of the Choi matrix, i.e. the minimal number of Kraus operators."""
    w = np.linalg.eigvalsh(choi_matrix(ch))
    return int(np.count_nonzero(w > tol * w[-1]))


def minimal_kraus(ch: QuantumChannel, tol: float = FLAG_TOL) -> QuantumChannel:
    """Same map with a minimal Kraus decomposition (input returned if already minimal)."""
    r = kraus_rank(ch, tol)
    if r == ch.kraus.shape[0]:
        return ch
    w, V = np.linalg.eigh(choi_matrix(ch))
    keep = w > tol * w[-1]
    D = ch.dim
    K = (V[:, keep] * np.sqrt(w[keep])).T.reshape(-1, D, D)
    return QuantumChannel(K[::-1])


def _require_primitive(ch: QuantumChannel):
    if not ch.primitive:
        raise NotPrimitive(f"{ch!r} is not primitive")
    if not (ch.unital or ch.trace_preserving):
        raise NotPrimitive("expansion coefficient needs a unital or trace-preserving map")


def expansion_coefficient(ch: QuantumChannel) -> float:
    """Operator norm of ``T - lim T^n`` on Hilbert-Schmidt space."""
    _require_primitive(ch)
    T = ch.transfer().matrix
    _, r = _dominant(T, spectral.TIE_TOL)
    _, l = _dominant(T.conj().T, spectral.TIE_TOL)
    limit = np.outer(r, l.conj()) / np.vdot(l, r)
    return float(spectral.singular_values(T - limit)[0])


def t_hat(ch: QuantumChannel) -> float:
    """``tr[(Lambda (x) Lambda) (T (x) T)[swap] swap]`` in the unital gauge.

    Non-unital primitive maps are first gauge-transformed to their unital
    form; the value is the k -> infinity dominant twisted eigenvalue either way.
    """
    if not ch.primitive:
        raise NotPrimitive(f"{ch!r} is not primitive")
    A, canon = canonicalize_primitive(MpsTensor(ch.kraus))
    return float(twisted_limit_eigenvalue(build_transfer(A), canon, 2).real)


class SwapIdentity(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def swap_singular_identity(ch: QuantumChannel) -> SwapIdentity:
    """Compare ``tr[s (T (x) T)[s]]`` with the sum of squared singular values."""
    from .twisted import apply_tensor_power, build_swaps

    T = ch.transfer()
    s = build_swaps(2, ch.dim).shift
    lhs = np.trace(s @ apply_tensor_power(T, s, 2))
    rhs = float(np.sum(spectral.singular_values(T.matrix) ** 2))
    sub_unital = np.linalg.eigvalsh(np.eye(ch.dim) - ch(np.eye(ch.dim)))[0] >= -FLAG_TOL
    if sub_unital and rhs > ch.dim ** 2 * (1 + FLAG_TOL):
        raise InvariantViolation(f"sum of squared singular values {rhs} exceeds D^2")
    return SwapIdentity(float(lhs.real), rhs, float(abs(lhs - rhs)))


@dataclass
class BoundsReport:
    D: int
    d: int
    kappa: float
    singular_gap: float
    sum_sq_singulars: float
    t_hat: float
    lambda_min: float
    s2_lambda: float
    lower: float
    upper1: float
    upper2: float
    upper2_raw: float
    upper2_active: bool
    maximally_mixed: bool
    rank_chain: tuple | None
    singular_gap_check: tuple | None
    rank_bounds: tuple | None
    restricted: bool
    gauge_fixed: bool
    violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        for key in ("rank_chain", "singular_gap_check", "rank_bounds"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out


def bounds_report(ch: QuantumChannel, slack: float = FLAG_TOL) -> BoundsReport:
    """Evaluate every Kraus-rank bound on ``t_hat`` and flag violated ones.

    The map is brought to its unital gauge and, when the adjoint fixed point
    is rank deficient, compressed to the dominant block before evaluation.
    """
    try:
        A, W, canon = dominant_block(MpsTensor(ch.kraus))
    except NotGapped as exc:
        raise NotPrimitive(f"transfer operator is not gapped: {exc}") from exc
    lam = W.conj().T @ canon.lambda1 @ W
    restricted = canon.d1 < ch.dim
    block = QuantumChannel(A.matrices)
    if not block.primitive:
        raise NotPrimitive("the dominant block is not primitive")
    gauge_fixed = restricted or not ch.unital

    D = block.dim
    d = kraus_rank(block)
    sv = spectral.singular_values(block.transfer().matrix)
    sum_sq = float(np.sum(sv ** 2))
    s_gap = float(sv[0] - (sv[1] if len(sv) > 1 else 0.0))
    kappa = expansion_coefficient(block)
    th = t_hat(block)
    p = np.clip(np.linalg.eigvalsh(lam), 0.0, None)
    lam_min = float(p[p > 1e-10].min())
    purity = float(np.sum(p ** 2))
    s2 = -math.log(purity)

    lower = 1.0 / d
    upper1 = 1.0 - lam_min ** 2 * (D ** 2 - sum_sq)
    upper2_raw = 1.0 - lam_min ** 2 * D ** 2 * (
        1.0 - purity / D - kappa * (kappa + 2.0 * (purity / D - 1.0 / D ** 2)))
    upper2 = min(max(upper2_raw, 0.0), 1.0)

    violations = []

    def check(name, small, big):
        if small > big + slack:
            violations.append(f"{name}: {small:.12g} > {big:.12g}")

    check("1/d <= t_hat", lower, th)
    check("t_hat <= upper1", th, upper1)
    check("t_hat <= upper2", th, upper2_raw)

    mixed = bool(np.abs(lam - np.eye(D) / D).max() <= FLAG_TOL) and block.trace_preserving
    chain = gap_check = None
    if mixed:
        chain = (lower, sum_sq / D ** 2, 1.0 / D ** 2 + kappa ** 2)
        check("1/d <= sum s^2 / D^2", chain[0], chain[1])
        check("sum s^2 / D^2 <= 1/D^2 + kappa^2", chain[1], chain[2])
        gap_check = (s_gap * (2.0 - s_gap), 1.0 + 1.0 / D ** 2 - 1.0 / d)
        check("Delta_s <= Delta_s (2 - Delta_s)", s_gap, gap_check[0])
        check("Delta_s (2 - Delta_s) <= 1 + 1/D^2 - 1/d", gap_check[0], gap_check[1])
        check("1 + 1/D^2 - 1/d <= 1", gap_check[1], 1.0)
    rank_bounds = (D ** 2 / sum_sq, 1.0 / (1.0 / D ** 2 + kappa ** 2)) if mixed else None

    return BoundsReport(
        D=D, d=d, kappa=kappa, singular_gap=s_gap, sum_sq_singulars=sum_sq, t_hat=th,
        lambda_min=lam_min, s2_lambda=s2, lower=lower, upper1=upper1, upper2=upper2,
        upper2_raw=upper2_raw, upper2_active=upper2_raw <= 1.0, maximally_mixed=mixed,
        rank_chain=chain, singular_gap_check=gap_check, rank_bounds=rank_bounds,
        restricted=restricted, gauge_fixed=gauge_fixed, violations=violations,
    )


def channel_to_mps(ch: QuantumChannel) -> MpsTensor:
    """MPS whose site matrices are a minimal set of Kraus operators of ``ch``.

    Its transfer-operator CP map is ``ch`` itself and its physical dimension
    is the Kraus rank.
    """
    return MpsTensor(minimal_kraus(ch).kraus)
