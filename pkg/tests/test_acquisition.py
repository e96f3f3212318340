import numpy as np
import pytest

from passivelsm import acquisition, forward, geometry
from passivelsm.acquisition import (
    CROSS_CORRELATION,
    IMAGINARY_NEAR_FIELD,
    NEAR_FIELD,
    add_noise,
    covariance_matrix,
    cross_correlation_matrix,
    imaginary_bracket,
    imaginary_near_field_matrix,
    near_field_matrix,
    read_matrix_csv,
    write_matrix_csv,
)
from passivelsm.geometry import BoundaryCurve, circle_points, discretize, place_scatterer

from oracles import singular_values_power_iteration


@pytest.fixture(scope="module")
def kite_system(ctx):
    curve = place_scatterer(BoundaryCurve(kind="kite"), ctx, (2.0, 2.0), 0.5)
    return forward.assemble_single_layer(discretize(curve, 256), ctx)


@pytest.fixture(scope="module")
def receivers():
    return circle_points(5.0, 16, role=geometry.ROLE_RECEIVER)


@pytest.fixture(scope="module")
def nf(kite_system, receivers):
    return near_field_matrix(receivers, kite_system)


@pytest.fixture(scope="module")
def imf(nf):
    return imaginary_near_field_matrix(nf)


SIGMA_LENGTH = 2 * np.pi * 50.0


def make_sources(count, beta=0.0, seed=0):
    return circle_points(50.0, count, beta=beta, seed=seed,
                         role=geometry.ROLE_RANDOM_SOURCE)


class TestNearField:
    def test_symmetric_by_reciprocity(self, nf):
        e = nf.entries
        assert np.linalg.norm(e - e.T) / np.linalg.norm(e) < 1e-6

    def test_empty_scatterer_gives_zero(self, ctx, receivers):
        system = forward.assemble_single_layer((), ctx)
        n = near_field_matrix(receivers, system)
        assert np.all(n.entries == 0)

    def test_kind_and_shape(self, nf, receivers):
        assert nf.kind == NEAR_FIELD
        assert nf.entries.shape == (receivers.count, receivers.count)
        assert nf.delta == 0.0


class TestImaginaryNearField:
    def test_is_twice_imaginary_part(self, nf, imf):
        np.testing.assert_allclose(imf.entries, 2j * nf.entries.imag, atol=1e-15)

    def test_entrywise_antihermitian(self, imf):
        np.testing.assert_allclose(imf.entries + np.conj(imf.entries), 0.0,
                                   atol=1e-15)

    def test_norm_bound(self, nf, imf):
        assert np.linalg.norm(imf.entries) <= 2 * np.linalg.norm(nf.entries) + 1e-15

    def test_skew_hermitian(self, imf):
        e = imf.entries
        assert np.linalg.norm(e + e.conj().T) / np.linalg.norm(e) < 1e-6

    def test_kind_check(self, imf):
        with pytest.raises(ValueError):
            imaginary_near_field_matrix(imf)


class TestCrossCorrelation:
    def test_approximates_imaginary_near_field(self, kite_system, receivers, imf):
        c = cross_correlation_matrix(receivers, make_sources(80), SIGMA_LENGTH,
                                     kite_system)
        rel = np.linalg.norm(c.entries - imf.entries) / np.linalg.norm(imf.entries)
        assert rel < 0.05

    def test_no_scatterer_gives_near_zero(self, ctx, receivers):
        system = forward.assemble_single_layer((), ctx)
        c = cross_correlation_matrix(receivers, make_sources(80), SIGMA_LENGTH,
                                     system)
        bracket = imaginary_bracket(ctx, receivers)
        assert np.linalg.norm(c.entries) < 0.02 * np.linalg.norm(bracket)

    def test_nearly_skew_hermitian(self, kite_system, receivers):
        c = cross_correlation_matrix(receivers, make_sources(80), SIGMA_LENGTH,
                                     kite_system)
        e = c.entries
        assert np.linalg.norm(e + e.conj().T) / np.linalg.norm(e) < 0.1

    def test_beta_degrades_and_more_sources_recover(self, kite_system, receivers,
                                                    imf):
        def mean_err(beta, count):
            errs = []
            for seed in range(5):
                c = cross_correlation_matrix(
                    receivers, make_sources(count, beta=beta, seed=seed),
                    SIGMA_LENGTH, kite_system,
                )
                errs.append(np.linalg.norm(c.entries - imf.entries)
                            / np.linalg.norm(imf.entries))
            return np.mean(errs)

        e03 = mean_err(0.3, 80)
        e09 = mean_err(0.9, 80)
        e09_l200 = mean_err(0.9, 200)
        assert e03 < e09
        assert e09_l200 < e03


class TestBracket:
    def test_diagonal_is_half_i(self, ctx, receivers):
        b = imaginary_bracket(ctx, receivers)
        np.testing.assert_allclose(np.diag(b), 0.5j, atol=1e-14)

    def test_purely_imaginary(self, ctx, receivers):
        b = imaginary_bracket(ctx, receivers)
        np.testing.assert_allclose(b.real, 0.0, atol=1e-14)


class TestCovariance:
    # The exact M -> infinity limit of the covariance matrix is the
    # TRANSPOSE of the same-source cross-correlation matrix (the two
    # formulas conjugate opposite factors); both tend to the symmetric
    # imaginary near-field matrix, so they agree once the source
    # quadrature is resolved, but at a tiny L only the transpose
    # identity is exact.

    def test_large_m_matches_cross_correlation_limit(self, ctx):
        # tiny configuration so 10^4 realizations stay cheap
        curve = place_scatterer(BoundaryCurve(kind="kite"), ctx, (2.0, 2.0), 0.5)
        system = forward.assemble_single_layer(discretize(curve, 64), ctx)
        recv = circle_points(5.0, 8)
        sources = make_sources(8)
        m = 10_000
        limit = cross_correlation_matrix(recv, sources, SIGMA_LENGTH, system)
        cov = covariance_matrix(recv, sources, SIGMA_LENGTH, m, 123, system)
        rel = (np.linalg.norm(cov.entries - limit.entries.T)
               / np.linalg.norm(limit.entries))
        assert rel < 3.0 / np.sqrt(m)

    def test_transpose_discrepancy_vanishes_when_resolved(self, kite_system,
                                                          receivers):
        # at a resolved source count the two limits (C and C transposed)
        # coincide, so comparing the covariance against C itself is sound
        sources = make_sources(80)
        c = cross_correlation_matrix(receivers, sources, SIGMA_LENGTH,
                                     kite_system).entries
        assert np.linalg.norm(c - c.T) / np.linalg.norm(c) < 0.01

    def test_error_decays_with_m(self, ctx):
        curve = place_scatterer(BoundaryCurve(kind="kite"), ctx, (2.0, 2.0), 0.5)
        system = forward.assemble_single_layer(discretize(curve, 64), ctx)
        recv = circle_points(5.0, 8)
        sources = make_sources(8)
        limit = cross_correlation_matrix(recv, sources, SIGMA_LENGTH,
                                         system).entries.T

        def mean_err(m):
            errs = []
            for seed in range(10):
                cov = covariance_matrix(recv, sources, SIGMA_LENGTH, m, seed,
                                        system)
                errs.append(np.linalg.norm(cov.entries - limit)
                            / np.linalg.norm(limit))
            return np.mean(errs)

        assert mean_err(800) < mean_err(200)

    def test_single_realization_is_rank_one(self, ctx):
        system = forward.assemble_single_layer((), ctx)
        recv = circle_points(5.0, 8)
        sources = make_sources(8)
        cov = covariance_matrix(recv, sources, SIGMA_LENGTH, 1, 5, system)
        statistical = cov.entries + imaginary_bracket(ctx, recv)
        s = np.linalg.svd(statistical, compute_uv=False)
        assert s[1] / s[0] < 1e-12


class TestAddNoise:
    def test_zero_amplitude_identity(self, imf):
        noisy = add_noise(imf, 0.0, seed=9)
        np.testing.assert_array_equal(noisy.entries, imf.entries)
        assert noisy.delta == 0.0

    def test_delta_is_spectral_norm(self, imf):
        noisy = add_noise(imf, 5e-2, seed=9)
        e = noisy.entries - imf.entries
        ref = singular_values_power_iteration(e, iters=4000)[0]
        assert noisy.delta == pytest.approx(ref, abs=1e-10 * max(ref, 1.0))

    def test_deterministic_in_seed(self, imf):
        a = add_noise(imf, 5e-2, seed=9)
        b = add_noise(imf, 5e-2, seed=9)
        np.testing.assert_array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, add_noise(imf, 5e-2, seed=10).entries)

    def test_frobenius_energy_statistics(self, imf):
        # E ||E||_F^2 = amp^2 max|entries|^2 J^2; check within 3 sigma over 50 seeds
        amp = 5e-2
        j = imf.size
        scale2 = (amp * np.abs(imf.entries).max()) ** 2
        samples = []
        for seed in range(50):
            e = add_noise(imf, amp, seed=seed).entries - imf.entries
            samples.append(np.linalg.norm(e) ** 2)
        mean = np.mean(samples)
        expected = scale2 * j * j
        sigma_mean = scale2 * j / np.sqrt(50)
        assert abs(mean - expected) < 3 * sigma_mean

    def test_rejects_negative_amplitude(self, imf):
        with pytest.raises(ValueError):
            add_noise(imf, -0.1, seed=0)


class TestCsvRoundTrip:
    def test_exact_round_trip(self, imf, tmp_path):
        noisy = add_noise(imf, 5e-2, seed=4)
        path = tmp_path / "matrix.csv"
        write_matrix_csv(noisy, path)
        entries, fields = read_matrix_csv(path)
        np.testing.assert_array_equal(entries, noisy.entries)
        assert fields["kind"] == IMAGINARY_NEAR_FIELD
        assert int(fields["J"]) == noisy.size
        assert float(fields["delta"]) == noisy.delta
