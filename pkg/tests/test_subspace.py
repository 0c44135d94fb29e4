import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

import modham
from modham import (
    IndexOutOfRange,
    NotMuSelfAdjoint,
    NotStandard,
    QuadratureNotConverged,
    Region,
    SpectrumOutOfDomain,
    build_harmonic_chain,
    cutting_projection,
    lndelta_arccot_split,
    lndelta_resolvent_quadrature,
    minimal_gap,
    mn_kernels,
    modular_data_full,
    mu_adjoint,
    mu_spectral_function,
    region_block,
    regularized_instance,
    restrict_correlators,
    standardness_check,
    vacuum_state,
)
from modham._linalg import adaptive_matrix_quadrature
from modham.regions import region_mask


def toy_state():
    """Single site with V = 1: correlators X = P = 1/2, so mu Gram = 1/2."""
    return vacuum_state(build_harmonic_chain(1, 0.0, 0.5))


class TestCuttingProjection:
    def test_single_site_of_two(self):
        proj = cutting_projection(Region([0]), 2)
        assert_allclose(np.diag(proj.diag_mask), [1, 0, 1, 0])

    def test_full_region_is_identity(self):
        proj = cutting_projection(Region(range(3)), 3)
        assert_allclose(proj.diag_mask, np.eye(6))

    def test_idempotence_random_regions(self, rng):
        for _ in range(5):
            sites = rng.choice(10, size=rng.integers(1, 9), replace=False)
            proj = cutting_projection(Region(sites), 10)
            assert_allclose(proj.diag_mask @ proj.diag_mask, proj.diag_mask)

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            cutting_projection(Region([5]), 4)


class TestMuAdjoint:
    def test_cut_projection_adjoint(self, chain8, center_region):
        # the adjoint of the cutting projection is -I P I
        _, state = chain8
        p_cut = cutting_projection(center_region, 8).diag_mask
        expected = -state.I_mat @ p_cut @ state.I_mat
        got = mu_adjoint(state, p_cut)
        assert np.linalg.norm(got - expected) <= 1e-10 * np.linalg.norm(expected)
        # equivalent Gram-side identity
        gram = state.mu_gram
        assert np.linalg.norm(gram @ expected - p_cut.T @ gram) <= 1e-10

    def test_identity(self, chain8):
        _, state = chain8
        assert_allclose(mu_adjoint(state, np.eye(16)), np.eye(16), atol=1e-12)

    def test_involution(self, chain8, rng):
        _, state = chain8
        a = rng.standard_normal((16, 16))
        assert_allclose(mu_adjoint(state, mu_adjoint(state, a)), a, atol=1e-10)


class TestMuSpectralFunction:
    def test_identity_function(self, chain8, center_region):
        _, state = chain8
        p_cut = cutting_projection(center_region, 8).diag_mask
        a = np.eye(16) - p_cut + state.I_mat @ p_cut @ state.I_mat
        assert_allclose(mu_spectral_function(state, a, lambda x: x), a, atol=1e-10)

    def test_arcoth_on_toy_spectrum(self):
        # diagonal operator with eigenvalues +-2 for a diagonal Gram metric
        state = toy_state()
        a = np.diag([2.0, -2.0])
        got = mu_spectral_function(
            state, a, lambda x: np.arctanh(1.0 / x), lambda x: np.abs(x) > 1
        )
        assert_allclose(got, np.diag([np.log(3.0) / 2.0, -np.log(3.0) / 2.0]), atol=1e-14)

    def test_exp_log_roundtrip(self, chain8, rng):
        _, state = chain8
        sym = rng.standard_normal((16, 16))
        sym = 0.5 * (sym + sym.T) / 8.0
        gram_sqrt = scipy.linalg.sqrtm(state.mu_gram).real
        a = np.linalg.solve(gram_sqrt, sym @ gram_sqrt)
        back = mu_spectral_function(
            state,
            mu_spectral_function(state, a, np.exp),
            np.log,
            lambda x: x > 0,
        )
        assert np.linalg.norm(back - a) <= 1e-9 * max(1.0, np.linalg.norm(a))

    def test_rejects_non_self_adjoint(self, chain8, rng):
        _, state = chain8
        with pytest.raises(NotMuSelfAdjoint):
            mu_spectral_function(state, rng.standard_normal((16, 16)), np.exp)

    def test_domain_violation(self):
        state = toy_state()
        with pytest.raises(SpectrumOutOfDomain) as info:
            mu_spectral_function(
                state, np.diag([2.0, 0.5]), lambda x: np.arctanh(1.0 / x),
                lambda x: np.abs(x) > 1,
            )
        assert info.value.eigenvalues == [0.5]


class TestStandardness:
    def test_full_region_not_standard(self, chain8):
        _, state = chain8
        report = standardness_check(state, Region(range(8)))
        assert not report.is_standard

    def test_empty_region_not_standard(self, chain8):
        _, state = chain8
        assert not standardness_check(state, Region([])).is_standard

    def test_half_chain_spectrum_bound(self, chain8_light):
        # the mu-spectrum magnitude never drops below 1 (up to 1e-9)
        _, state = chain8_light
        report = standardness_check(state, Region.half(8))
        assert report.min_abs_eigenvalue >= 1.0 - 1e-9

    def test_well_conditioned_region_is_standard(self, chain8, center_region):
        _, state = chain8
        report = standardness_check(state, center_region)
        assert report.is_standard and report.is_separating
        assert report.min_abs_eigenvalue >= 1.0 - 1e-9
        assert report.trivial_dim == 2 * 8 - 4 * 2

    def test_oversized_region_not_separating(self, chain8):
        _, state = chain8
        report = standardness_check(state, Region(range(6)))
        assert not report.is_separating and not report.is_standard


@pytest.fixture(scope="module")
def data8():
    state = vacuum_state(build_harmonic_chain(8, 1.0))
    return state, modular_data_full(state, Region([3, 4]))


class TestModularData:
    def test_a_operator_structure(self, data8):
        state, md = data8
        gram = state.mu_gram
        # mu-self-adjoint and spectrum outside (-1, 1)
        assert np.linalg.norm(gram @ md.A - md.A.T @ gram) <= 1e-10
        sym = scipy.linalg.sqrtm(gram).real
        eigs = np.linalg.eigvalsh(sym @ md.A @ np.linalg.inv(sym))
        assert np.min(np.abs(eigs)) >= 1.0 - 1e-9

    def test_s_fixes_region_vectors(self, data8, rng):
        state, md = data8
        mask = region_mask(md.region, 8)
        h = rng.standard_normal((16, 10)) * mask[:, None]
        assert np.linalg.norm(md.S_op @ h - h) <= 1e-8 * np.linalg.norm(h)

    def test_tomita_algebra(self, data8):
        state, md = data8
        eye = np.eye(16)
        i_mat = state.I_mat
        norm_s = np.linalg.norm(md.S_op)
        assert np.linalg.norm(md.S_op @ md.S_op - eye) <= 1e-7 * norm_s
        assert np.linalg.norm(md.S_op @ i_mat + i_mat @ md.S_op) <= 1e-7 * norm_s
        assert np.linalg.norm(md.J_op @ md.J_op - eye) <= 1e-8
        assert np.linalg.norm(md.J_op @ i_mat + i_mat @ md.J_op) <= 1e-7
        gram = state.mu_gram
        assert np.linalg.norm(md.J_op.T @ gram @ md.J_op - gram) <= 1e-8 * np.linalg.norm(gram)

    def test_polar_decomposition(self, data8):
        _, md = data8
        half = scipy.linalg.expm(0.5 * md.lnDelta)
        assert np.linalg.norm(md.S_op - md.J_op @ half) <= 1e-7 * np.linalg.norm(md.S_op)

    def test_lndelta_mu_self_adjoint(self, data8):
        state, md = data8
        gram = state.mu_gram
        scale = np.linalg.norm(gram) * max(np.linalg.norm(md.lnDelta), 1.0)
        assert np.linalg.norm(gram @ md.lnDelta - md.lnDelta.T @ gram) <= 1e-9 * scale

    def test_delta_positive_and_consistent(self, data8):
        state, md = data8
        sym = scipy.linalg.sqrtm(state.mu_gram).real
        eigs = np.linalg.eigvalsh(sym @ md.Delta @ np.linalg.inv(sym))
        assert eigs.min() > 0
        assert md.consistency_residual <= 1e-8

    def test_reconstruction_identity(self, data8):
        # A (1 - Delta) = -(1 + Delta) on H_L
        state, md = data8
        eye = np.eye(16)
        resid = (md.A @ (eye - md.Delta) + (eye + md.Delta)) @ md.projector
        assert np.linalg.norm(resid) <= 1e-7 * np.linalg.norm(md.A)

    def test_degenerate_region_raises(self):
        state = vacuum_state(build_harmonic_chain(16, 1.0))
        with pytest.raises((NotStandard, SpectrumOutOfDomain)):
            modular_data_full(state, Region.half(16))

    def test_empty_and_full_raise(self, chain8):
        _, state = chain8
        with pytest.raises(NotStandard):
            modular_data_full(state, Region([]))
        with pytest.raises(NotStandard):
            modular_data_full(state, Region(range(8)))


class TestResolventQuadrature:
    def test_scalar_toy_closed_form(self):
        # 2 A (A^2 - s^2)^{-1} integrated over [0, 1] equals 2 arcoth(A)
        a = 2.0 * np.eye(2)

        def integrand(s):
            return 2.0 * np.linalg.solve(a @ a - s * s * np.eye(2), a)

        integral, err, _ = adaptive_matrix_quadrature(integrand, 0.0, 1.0, 1e-10)
        assert_allclose(integral, np.log(3.0) * np.eye(2), atol=1e-10)
        assert err <= 1e-10

    def test_agrees_with_spectral_route(self, chain8, center_region):
        _, state = chain8
        md = modular_data_full(state, center_region)
        quad = lndelta_resolvent_quadrature(state, center_region, quad_tol=1e-10)
        assert np.linalg.norm(quad.lnDelta - md.lnDelta) <= 1e-8 * np.linalg.norm(md.lnDelta)
        assert quad.error_bound <= 1e-10

    def test_agrees_on_purified_half(self):
        state = vacuum_state(build_harmonic_chain(16, 0.1))
        pure, region, _ = regularized_instance(state, Region.half(16), 1e-6)
        md = modular_data_full(pure, region)
        quad = lndelta_resolvent_quadrature(pure, region, quad_tol=1e-10)
        assert np.linalg.norm(quad.lnDelta - md.lnDelta) <= 1e-8 * np.linalg.norm(md.lnDelta)

    def test_empty_region_raises(self, chain8):
        _, state = chain8
        with pytest.raises(NotStandard):
            lndelta_resolvent_quadrature(state, Region([]))

    def test_evaluation_cap(self):
        # a spike the 15-point rule cannot resolve within one refinement
        def nasty(s):
            return np.array([[1.0 / (abs(s - 0.3) + 1e-14)]])

        with pytest.raises(QuadratureNotConverged) as info:
            adaptive_matrix_quadrature(nasty, 0.0, 1.0, 1e-12, max_evals=60)
        assert info.value.achieved_error > 0


class TestArccotSplit:
    def test_matches_full_space_product(self, chain8, center_region):
        _, state = chain8
        md = modular_data_full(state, center_region)
        split = lndelta_arccot_split(state, center_region)
        full = state.I_mat @ md.lnDelta
        assert np.linalg.norm(split - full) <= 1e-8 * np.linalg.norm(full)

    def test_off_blocks_vanish(self, chain8, center_region):
        # I ln Delta leaves both the region and its complement invariant
        _, state = chain8
        md = modular_data_full(state, center_region)
        full = state.I_mat @ md.lnDelta
        mask = region_mask(center_region, 8)
        off = full[np.ix_(mask, ~mask)]
        off2 = full[np.ix_(~mask, mask)]
        assert max(np.abs(off).max(), np.abs(off2).max()) <= 1e-9

    def test_mirror_antisymmetry_on_true_half(self):
        # even chain, true half: the complement block is the spatial mirror
        # of the region block with opposite overall sign
        n = 4
        state = vacuum_state(build_harmonic_chain(n, 0.1))
        region = Region.half(n)
        assert minimal_gap(state, region) > 1e-7
        split = lndelta_arccot_split(state, region)
        blk_r = region_block(split, region, n)
        comp = region.complement(n)
        blk_c = region_block(split, comp, n)
        r = n // 2
        mirror = np.zeros((2 * r, 2 * r))
        flip = np.eye(r)[::-1]
        mirror[:r, :r] = flip
        mirror[r:, r:] = flip
        assert np.linalg.norm(blk_c + mirror @ blk_r @ mirror) <= 1e-8 * np.linalg.norm(blk_r)

    def test_purified_half_matches(self):
        state = vacuum_state(build_harmonic_chain(16, 1.0))
        pure, region, _ = regularized_instance(state, Region.half(16), 1e-6)
        md = modular_data_full(pure, region)
        split = lndelta_arccot_split(pure, region)
        full = pure.I_mat @ md.lnDelta
        assert np.linalg.norm(split - full) <= 1e-7 * np.linalg.norm(full)

    def test_region_block_equals_mn(self, chain8, center_region):
        _, state = chain8
        split = lndelta_arccot_split(state, center_region)
        kernels = mn_kernels(restrict_correlators(state, center_region))
        blk = region_block(split, center_region, 8)
        assert np.linalg.norm(blk - kernels.L_block) <= 1e-7 * np.linalg.norm(kernels.L_block)


def test_mu_adjoint_warns_on_ill_conditioned_gram():
    # a near-massless periodic chain pushes the Gram condition past 1e12
    import warnings

    from modham import ConditioningWarning

    state = vacuum_state(build_harmonic_chain(4, 3.2e-7, 1.0, "periodic"))
    with pytest.warns(ConditioningWarning):
        mu_adjoint(state, np.eye(8))
