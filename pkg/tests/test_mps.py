import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from renyimps.errors import BadSiteList, BudgetExceeded, InvalidAlpha, InvariantViolation, ZeroState
from renyimps.gallery import beta_mps, random_mps, tprime_mps
from renyimps.mps import (
    MpsTensor,
    every_kth_site,
    expand_state,
    purity_oracle,
    reduced_density,
    renyi_entropy,
    validate_density,
)
from renyimps.spectral import trace_power
from renyimps.transfer import build_transfer
from renyimps.twisted import purity_via_transfer

ALPHAS = [0, 0.5, 1, 2, 3, 5, math.inf]


class TestMpsTensor:
    def test_shape_checks(self):
        with pytest.raises(InvariantViolation):
            MpsTensor(np.zeros((2, 2, 3)))
        with pytest.raises(InvariantViolation):
            MpsTensor(np.zeros((2, 2, 2)))
        with pytest.raises(InvariantViolation):
            MpsTensor(np.full((1, 1, 1), np.nan))

    def test_immutable(self):
        A = beta_mps(0.5)
        with pytest.raises(ValueError):
            A.matrices[0, 0, 0] = 3.0
        assert (A.phys_dim, A.bond_dim) == (2, 2)


class TestExpandState:
    def test_ghz(self):
        psi = expand_state(beta_mps(1.0), 3).amplitudes
        expected = np.zeros(8)
        expected[0] = expected[7] = 1 / math.sqrt(2)
        assert np.allclose(psi, expected)

    def test_product(self):
        psi = expand_state(MpsTensor(np.array([[[1.0]], [[0.0]]])), 4).amplitudes
        assert psi[0] == pytest.approx(1.0) and np.allclose(psi[1:], 0)

    def test_norm_is_transfer_trace(self):
        A = random_mps(2, 2, 7)
        state = expand_state(A, 6)
        assert state.raw_norm_sq == pytest.approx(trace_power(build_transfer(A).matrix, 6).real, rel=1e-10)

    def test_odd_and_even_lengths_agree_with_direct_traces(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3))
        for n in (1, 2, 5):
            state = expand_state(MpsTensor(A), n)
            raw = []
            for idx in np.ndindex(*(2,) * n):
                M = np.eye(3)
                for i in idx:
                    M = M @ A[i]
                raw.append(np.trace(M))
            raw = np.array(raw) / math.sqrt(state.raw_norm_sq)
            assert np.allclose(state.amplitudes, raw)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            expand_state(beta_mps(0.5), 21)
        expand_state(beta_mps(0.5), 3, budget=8)

    def test_vanishing_state(self):
        # nilpotent site matrix: every periodic trace vanishes
        A = np.zeros((1, 2, 2))
        A[0, 0, 1] = 1.0
        with pytest.raises(ZeroState):
            expand_state(MpsTensor(A), 4)


class TestReducedDensity:
    def test_ghz_single_site(self):
        rho = reduced_density(expand_state(beta_mps(1.0), 4), [1])
        assert np.allclose(rho, np.eye(2) / 2)

    def test_product_pair(self):
        rho = reduced_density(expand_state(beta_mps(0.0), 4), [2, 4])
        target = np.zeros((4, 4))
        target[0, 0] = 1
        assert np.allclose(rho, target)

    def test_every_third_site_of_example_is_maximally_mixed(self):
        rho = reduced_density(expand_state(tprime_mps(), 9), [3, 6, 9])
        assert np.abs(rho - np.eye(8) / 8).max() < 1e-12

    def test_all_sites_gives_pure_projector(self):
        state = expand_state(random_mps(2, 2, 1), 6)
        rho = reduced_density(state, range(1, 7))
        assert np.abs(rho - np.outer(state.amplitudes, state.amplitudes.conj())).max() < 1e-14

    @pytest.mark.parametrize("sites", [[], [2, 1], [1, 1], [0, 2], [1, 7]])
    def test_bad_sites(self, sites):
        with pytest.raises(BadSiteList):
            reduced_density(expand_state(beta_mps(0.5), 6), sites)

    def test_result_is_density(self):
        state = expand_state(random_mps(3, 2, 4), 6)
        for sites in ([1], [2, 5], [1, 3, 4, 6]):
            validate_density(reduced_density(state, sites))


class TestRenyiEntropy:
    def test_maximally_mixed_qubit(self):
        assert renyi_entropy(np.eye(2) / 2, 2) == pytest.approx(math.log(2))

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_pure_state_has_zero_entropy(self, alpha):
        v = np.array([1, 1j, 0]) / math.sqrt(2)
        assert renyi_entropy(np.outer(v, v.conj()), alpha) == pytest.approx(0.0, abs=1e-12)

    def test_closed_form(self):
        assert renyi_entropy(np.diag([0.75, 0.25]), 2) == pytest.approx(-math.log(10 / 16))

    def test_special_orders(self):
        p = np.array([0.5, 0.3, 0.2, 0.0])
        rho = np.diag(p)
        assert renyi_entropy(rho, 0) == pytest.approx(math.log(3))
        assert renyi_entropy(rho, 1) == pytest.approx(-np.sum(p[:3] * np.log(p[:3])))
        assert renyi_entropy(rho, math.inf) == pytest.approx(-math.log(0.5))

    @pytest.mark.parametrize("alpha", [-1, float("nan"), None])
    def test_invalid_alpha(self, alpha):
        with pytest.raises(InvalidAlpha):
            renyi_entropy(np.eye(2) / 2, alpha)

    def test_rejects_non_density(self):
        with pytest.raises(InvariantViolation):
            renyi_entropy(np.diag([0.7, 0.7]), 2)
        with pytest.raises(InvariantViolation):
            renyi_entropy(np.array([[0.5, 0.3], [0.0, 0.5]]), 2)
        with pytest.raises(InvariantViolation):
            renyi_entropy(np.diag([1.2, -0.2]), 2)

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_monotone_in_alpha(self, dim, rank, seed):
        rho = random_density(np.random.default_rng(seed), dim, min(rank, dim))
        values = [renyi_entropy(rho, a) for a in ALPHAS]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
    def test_additive(self, d1, d2, seed):
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(rng, d1), random_density(rng, d2)
        for a in ALPHAS:
            joint = renyi_entropy(np.kron(rho, sigma), a)
            assert joint == pytest.approx(renyi_entropy(rho, a) + renyi_entropy(sigma, a), abs=1e-9)

    @given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
    def test_min_entropy_sandwich(self, dim, seed):
        rho = random_density(np.random.default_rng(seed), dim)
        s_inf = renyi_entropy(rho, math.inf)
        for a in (2, 3, 5):
            assert s_inf >= (a - 1) / a * renyi_entropy(rho, a) - 1e-9
        for a in ALPHAS:
            assert renyi_entropy(rho, a) >= s_inf - 1e-9
        assert s_inf >= 0.5 * renyi_entropy(rho, 2) - 1e-9


class TestPurityOracle:
    def test_product(self):
        assert purity_oracle(beta_mps(0.0), 6, 2, 2) == pytest.approx(1.0)

    def test_ghz(self):
        assert purity_oracle(beta_mps(1.0), 6, 2, 2) == pytest.approx(0.5)

    def test_matches_transfer_formula(self):
        A = random_mps(2, 2, 7)
        assert abs(purity_oracle(A, 8, 2, 2) - purity_via_transfer(A, 8, 2, 2)) <= 1e-10

    def test_requires_divisor(self):
        with pytest.raises(ValueError):
            purity_oracle(beta_mps(0.5), 7, 2, 2)
        assert every_kth_site(12, 4) == [4, 8, 12]
