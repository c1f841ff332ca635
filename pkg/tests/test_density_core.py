import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import normalized_params
from oracles import jordan_density, kernel_power_sum, laplacian5, partial_sum, z_matrix_loops
from toeplitz_lab import density_core as dc
from toeplitz_lab.errors import DegenerateRoots, OutsideDomain, RegimeViolation, StepTooLarge
from toeplitz_lab.regime import max_admissible_r0
from toeplitz_lab.symbol_geometry import SymbolParams, characteristic_roots, f_eval, focal_points, sample_annulus

P = SymbolParams(1.0, 0.25)
JORDAN = SymbolParams(1.0, 1e-9)


def interior_points(params, lo, hi, size, seed):
    return sample_annulus(params, lo, hi, size, np.random.default_rng(seed))


class TestPartialGeom:
    def test_examples(self):
        assert dc.partial_geom(0.5, 3) == pytest.approx(1.75)
        assert dc.partial_geom(1.0, 7) == pytest.approx(7.0)
        assert dc.partial_geom(0.9, 5) == pytest.approx(4.0951)
        assert dc.partial_geom(0.3 + 0.1j, 0) == 0

    def test_near_one_uses_direct_sum(self):
        t = 1 + 1e-10j
        assert dc.partial_geom(t, 40) == pytest.approx(partial_sum(t, 40), rel=1e-14)

    @given(st.complex_numbers(max_magnitude=1.2), st.integers(0, 40))
    def test_matches_explicit_sum(self, t, m):
        expect = partial_sum(t, m)
        assert dc.partial_geom(t, m) == pytest.approx(expect, rel=1e-9, abs=1e-9)

    def test_broadcasts(self):
        out = dc.partial_geom(0.5, np.arange(1, 5))
        assert out == pytest.approx([1, 1.5, 1.75, 1.875])


class TestG0:
    def test_examples(self):
        assert dc.g0(P, 3, 0.5j) == pytest.approx(-0.37503j, abs=1e-4)
        assert dc.g0(SymbolParams(1, 1), 3, np.sqrt(2)) == pytest.approx(0, abs=1e-14)
        assert dc.g0(SymbolParams(2j, 0.5), 0, 0.3) == pytest.approx(1 / 2j)

    def test_exact_value(self):
        # zeta_-^4 - zeta_+^4 over zeta_- - zeta_+ with zeta = (1 +- sqrt 5) i / 4
        assert dc.g0(P, 3, 0.5j) == pytest.approx(-0.375j, abs=1e-15)

    @given(normalized_params(), st.integers(1, 30))
    def test_vanishes_on_unperturbed_spectrum(self, p, n):
        nu = np.arange(1, n + 1)
        z = 2 * np.sqrt(p.a * p.b) * np.cos(np.pi * nu / (n + 1))
        # scale: the size of h_n near the segment is at most (n+1) |b/a|^(n/2) / |a|
        scale = (n + 1) * abs(p.b / p.a) ** (n / 2) / abs(p.a)
        assert np.max(np.abs(dc.g0(p, n, z))) <= 1e-10 * scale

    def test_degenerate(self):
        with pytest.raises(DegenerateRoots):
            dc.g0(P, 5, 1.0)


class TestZ:
    def test_one_by_one(self):
        assert dc.z_vector(P, 1, 0.5j) == pytest.approx(np.array([[1.0]]))

    def test_two_by_two(self):
        Z = dc.z_vector(P, 2, 0.5j)
        assert Z[1, 0] == pytest.approx(1.0)
        zm, zp = characteristic_roots(P, 0.5j)
        assert Z[0, 1] == pytest.approx((1 + zp / zm) ** 2 * zm ** 2)

    @given(normalized_params(ratio_max=0.7), st.integers(1, 10), st.floats(0.1, 0.9), st.floats(0, 2 * np.pi))
    def test_matches_loop_formula(self, p, n, s, theta):
        rho = p.r_min + s * (1 - p.r_min)
        z = complex(f_eval(p, rho * np.exp(1j * theta)))
        expect = z_matrix_loops(p.a, p.b, n, z)
        got = dc.z_vector(p, n, z)
        assert np.max(np.abs(got - expect)) <= 1e-10 * np.max(np.abs(expect))

    def test_norm_examples(self):
        assert dc.z_norm(P, 1, 0.5j) == pytest.approx(1.0)
        Z = dc.z_vector(P, 64, 0.5j)
        assert np.sqrt(np.sum(np.abs(Z) ** 2)) == pytest.approx(dc.z_norm(P, 64, 0.5j), rel=1e-12)

    def test_norm_identity_many(self):
        zs = interior_points(P, 0.55, 0.95, 100, 3)
        for n in (1, 2, 3, 7, 16, 33, 64, 128):
            for z in zs:
                kn = dc.k_n(P, n, z)
                assert kn == dc.z_norm(P, n, z)
                Z = dc.z_vector(P, n, z)
                assert np.sqrt(np.sum(np.abs(Z) ** 2)) == pytest.approx(kn, rel=1e-12)

    def test_large_n_approaches_kinf(self):
        assert dc.z_norm(P, 400, 0.5j) == pytest.approx(dc.k_inf(P, 0.5j), rel=1e-14)


class TestKN:
    @given(normalized_params(), st.complex_numbers(max_magnitude=0.5))
    def test_first_term(self, p, z):
        if min(abs(z - focal_points(p)[0]), abs(z + focal_points(p)[0])) < 1e-3:
            return
        assert dc.k_n(p, 1, z) == pytest.approx(1 / abs(p.a) ** 2)

    @given(st.complex_numbers(max_magnitude=1.0))
    def test_two_terms(self, z):
        if min(abs(z - 1), abs(z + 1)) < 1e-3:
            return
        assert dc.k_n(P, 2, z) == pytest.approx(1 + abs(z) ** 2)

    def test_tail_at_fifty(self):
        # the difference is the geometric tail sum_{k >= 50} |h_k|^2
        tail = dc.k_inf(P, 0.5j) - dc.k_n(P, 50, 0.5j)
        h = dc.h_sequence(P, 2000, 0.5j)
        assert tail == pytest.approx(np.sum(np.abs(h[50:]) ** 2), rel=1e-4)
        assert 0 < tail < 1e-9
        assert dc.k_inf(P, 0.5j) - dc.k_n(P, 60, 0.5j) < 1e-10

    @pytest.mark.xfail(strict=True, reason="the tail at N=50 is 9.5e-10 (|zeta_-|^100 scale), not below 1e-10")
    def test_tail_at_fifty_literal_claim(self):
        assert abs(dc.k_n(P, 50, 0.5j) - dc.k_inf(P, 0.5j)) <= 1e-10

    @given(normalized_params(), st.floats(0.05, 0.9), st.floats(0, 2 * np.pi))
    def test_monotone_truncation(self, p, s, theta):
        rho = p.r_min + s * (1 - p.r_min)
        z = f_eval(p, rho * np.exp(1j * theta))
        ks = [dc.k_n(p, n, z) for n in (1, 2, 5, 20, 80)]
        # once the added terms drop below one ulp, pairwise summation may
        # reorder the last bit
        assert all(x <= y * (1 + 1e-14) for x, y in zip(ks, ks[1:]))
        assert ks[0] < ks[1] < ks[2]
        assert ks[-1] <= dc.k_inf(p, z) * (1 + 1e-12)


class TestKInf:
    def test_jordan_proxy(self):
        assert dc.k_inf(SymbolParams(1, 1e-6), 0.5) == pytest.approx(1 / 0.75, rel=1e-5)
        assert dc.k_inf(SymbolParams(1, 1e-6), 0.5) == pytest.approx(
            kernel_power_sum(1.0, 1e-6, 0.5, 10_000)[0], rel=1e-10)

    def test_value_at_half_i(self):
        oracle = kernel_power_sum(1.0, 0.25, 0.5j, 10_000)[0]
        assert dc.k_inf(P, 0.5j) == pytest.approx(oracle, rel=1e-10)
        assert oracle == pytest.approx(1.92, rel=1e-12)

    def test_near_boundary(self):
        z = f_eval(P, 0.999 * np.exp(0.7j))
        k = dc.k_inf(P, z)
        assert np.isfinite(k)
        assert 0.1 < k * (1 - 0.999 ** 2) < 10

    def test_outside(self):
        with pytest.raises(OutsideDomain):
            dc.k_inf(P, 1.25)
        with pytest.raises(OutsideDomain):
            dc.k_inf(P, 2.0)

    @given(normalized_params(ratio_max=0.7), st.floats(0.05, 1.0), st.floats(0, 2 * np.pi))
    def test_against_power_series(self, p, s, theta):
        rho = p.r_min * 1.05 + s * (0.95 - p.r_min * 1.05)
        z = f_eval(p, rho * np.exp(1j * theta))
        oracle = kernel_power_sum(p.a, p.b, z, 10_000)[0]
        assert dc.k_inf(p, z) == pytest.approx(oracle, rel=1e-10)

    def test_against_recurrence_series_including_segment(self):
        zs = interior_points(P, 0.5 * (1 + 1e-9), 0.95, 400, 5)
        zs = np.concatenate([zs, np.linspace(-0.99, 0.99, 50)])
        rel = np.abs(dc.k_inf(P, zs) / dc.k_series(P, zs) - 1)
        assert rel.max() <= 1e-10

    def test_three_term_form_agrees(self):
        zs = interior_points(P, 0.6, 0.95, 200, 6)
        assert dc.k_inf_three_term(P, zs) == pytest.approx(dc.k_inf(P, zs), rel=1e-10)


class TestXi:
    def test_jordan_examples(self):
        assert dc.xi_density(JORDAN, 0.0) == pytest.approx(2 / np.pi, rel=1e-3)
        assert dc.xi_density(JORDAN, 0.5) == pytest.approx(1.1318, rel=1e-4)

    def test_jordan_limit_disc(self):
        rng = np.random.default_rng(8)
        r = 0.8 * np.sqrt(rng.uniform(0, 1, 500))
        z = r * np.exp(2j * np.pi * rng.uniform(0, 1, 500))
        rel = np.abs(dc.xi_density(JORDAN, z) / jordan_density(z) - 1)
        assert rel.max() <= 1e-3

    def test_against_series_fd(self):
        z = 0.5j
        logk = lambda w: np.log(kernel_power_sum(1.0, 0.25, w, 10_000))  # noqa: E731
        h = 4e-3
        coarse, fine = laplacian5(logk, z, h)[0], laplacian5(logk, z, h / 2)[0]
        oracle = (4 * fine - coarse) / 3 / (2 * np.pi)
        assert dc.xi_density(P, z) == pytest.approx(oracle, rel=1e-5)

    @given(normalized_params(), st.floats(0.0, 0.97), st.floats(0, 2 * np.pi))
    def test_positive(self, p, s, theta):
        rho = p.r_min + s * (1 - p.r_min)
        z = f_eval(p, rho * np.exp(1j * theta))
        assert dc.xi_density(p, z) > 0

    def test_errors(self):
        with pytest.raises(OutsideDomain):
            dc.xi_density(P, 1.3)
        with pytest.raises(StepTooLarge):
            dc.xi_density(P, 0.5j, h=0.1)


class TestEnvelope:
    def test_examples(self):
        e = dc.error_envelope(P, 501, 1e-12, 0.3)  # |zeta_-(0.3)| = 0.5
        assert e == pytest.approx(1.258e-4, rel=1e-3)
        z08 = f_eval(P, 0.8)
        assert dc.error_envelope(P, 101, 1e-8, z08) == pytest.approx(0.0823 + 0.0103, rel=2e-3)
        assert dc.error_envelope(P, 101, 1e-8, 1.25) == pytest.approx(1e-8 * 101 ** 3)


class TestCurvatureIdentity:
    def test_examples(self):
        assert dc.verify_prop42(P, 8, 0.5j, h=1e-4).rel_err <= 1e-6
        assert dc.verify_prop42(P, 2, 0.5j).rel_err <= 1e-6
        rep = dc.verify_prop42(P, 1, 0.5j)
        assert (rep.lhs, rep.rhs, rep.rel_err) == (0.0, 0.0, 0.0)

    def test_report_fields(self):
        rep = dc.verify_prop42(P, 8, 0.3 + 0.4j)
        assert rep.n == 8 and rep.z == 0.3 + 0.4j
        assert rep.rel_err == pytest.approx(abs(rep.lhs - rep.rhs) / max(abs(rep.lhs), abs(rep.rhs)))

    @given(normalized_params(ratio_max=0.5), st.sampled_from([2, 5, 13, 40]),
           st.floats(0.1, 0.8), st.floats(0, 2 * np.pi))
    def test_random(self, p, n, s, theta):
        rho = p.r_min + s * (1 - p.r_min)
        z = f_eval(p, rho * np.exp(1j * theta))
        assert dc.verify_prop42(p, n, z).rel_err <= 1e-6

    def test_errors(self):
        with pytest.raises(StepTooLarge):
            dc.verify_prop42(P, 8, 0.5j, h=0.1)
        with pytest.raises(DegenerateRoots):
            dc.verify_prop42(P, 8, 1.0)

    def test_lower_bound_examples(self):
        lhs, bound, ok = dc.verify_lower_bound(P, 8, 0.5j)
        assert bound == 2 and ok
        assert dc.verify_lower_bound(SymbolParams(2, 0.25), 8, 0.5j)[1] == pytest.approx(0.03125)
        lhs, _, ok = dc.verify_lower_bound(P, 2, 0.5j)
        assert lhs == pytest.approx(2.0, rel=1e-8) and ok

    @given(normalized_params(ratio_max=0.5), st.integers(2, 30), st.floats(0.1, 0.8), st.floats(0, 2 * np.pi))
    def test_lower_bound_random(self, p, n, s, theta):
        rho = p.r_min + s * (1 - p.r_min)
        z = f_eval(p, rho * np.exp(1j * theta))
        assert dc.verify_lower_bound(p, n, z)[2]

    def test_order_bracket(self):
        zs = interior_points(P, 0.6, 0.9, 50, 9)
        assert dc.verify_prop43_order(P, 32, zs).passed
        single = dc.verify_prop43_order(P, 2, [0.5j])
        assert 0 < single.min_ratio < np.inf
        edge = f_eval(P, (1 - 1 / 32) * np.exp(1j * np.linspace(0.2, 3.0, 10)))
        assert dc.verify_prop43_order(P, 32, edge).passed


class TestGLin:
    def test_zero_q(self):
        assert dc.g_lin(P, 6, 1e-3, 0.2 + 0.3j, np.zeros((6, 6))) == pytest.approx(dc.g0(P, 6, 0.2 + 0.3j))

    def test_unperturbed_zero(self):
        z = 2 * 0.5 * np.cos(np.pi * 2 / 7)
        q = np.ones((6, 6))
        assert abs(dc.g_lin(P, 6, 0.0, z, q)) < 1e-14

    def test_recompute(self):
        rng = np.random.default_rng(11)
        q = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        z = 0.4 + 0.5j
        expect = dc.g0(P, 8, z) - 1e-4 * np.sum(q * z_matrix_loops(1.0, 0.25, 8, z))
        assert dc.g_lin(P, 8, 1e-4, z, q) == pytest.approx(expect, rel=1e-12)


class TestRoots:
    @pytest.mark.parametrize("a,b", [(1, 0.25), (1j, 0.5), (2, -1.5 + 0.3j)])
    def test_match_spectrum(self, a, b):
        p = SymbolParams(a, b)
        for n in range(1, 13):
            found = dc.g0_zeros(p, n)
            assert found.size == n
            nu = np.arange(1, n + 1)
            expect = 2 * np.sqrt(p.a * p.b) * np.cos(np.pi * nu / (n + 1))
            err = np.max(np.min(np.abs(found[:, None] - expect[None, :]), axis=1))
            assert err <= 1e-8
            # and each expected value is hit once
            assert len({int(np.argmin(np.abs(expect - f))) for f in found}) == n


class TestField:
    def test_positive_on_mask(self):
        r0 = max_admissible_r0(P, 101, 1e-8)
        f = dc.density_field(P, 101, 1e-8, (-1.5, 1.5, -1.5, 1.5), 50, 50, r0)
        assert f.mask.any()
        assert np.all(f.values[f.mask] > 0)
        assert np.all(np.isnan(f.values[~f.mask]))

    def test_empty_mask(self):
        f = dc.density_field(P, 101, 1e-8, (3, 4, 3, 4), 10, 10, 0.8)
        assert not f.mask.any()
        assert f.integral() == 0.0

    def test_regime_violation(self):
        with pytest.raises(RegimeViolation) as info:
            dc.density_field(P, 1000, 1e-3, (-1, 1, -1, 1), 4, 4, 0.9)
        assert info.value.report is not None and not info.value.report.verdict

    def test_workers_bitwise(self):
        args = (P, 101, 1e-8, (-1.3, 1.3, -0.9, 0.9), 37, 23, 0.8)
        one = dc.density_field(*args, workers=1)
        many = dc.density_field(*args, workers=8)
        assert np.array_equal(one.mask, many.mask)
        assert np.array_equal(one.values, many.values, equal_nan=True)

    def test_grid_integral_tracks_quadrature(self):
        r0 = 0.8 + 1 / 101
        f = dc.density_field(P, 101, 1e-8, (-1.2, 1.2, -0.8, 0.8), 400, 300, r0, 0.6, check_regime=False)
        assert f.integral() == pytest.approx(dc.annulus_integral(P, 0.6, 0.8), rel=0.02)


class TestQuadrature:
    def test_jordan_annulus_closed_form(self):
        # xi = (2/pi)(1-|z|^2)^-2 integrates to 2/(1-r^2) in r
        got = dc.annulus_integral(JORDAN, 0.3, 0.7)
        assert got == pytest.approx(2 / (1 - 0.49) - 2 / (1 - 0.09), rel=1e-4)

    def test_converged(self):
        a = dc.annulus_integral(P, 0.6, 0.8)
        b = dc.annulus_integral(P, 0.6, 0.8, n_rho=80, n_theta=2000)
        assert a == pytest.approx(b, rel=1e-9)

    def test_bump_against_grid(self):
        c, w = 0.3 + 0.4j, 0.2
        x = np.linspace(-w, w, 401)
        X, Y = np.meshgrid(x, x, indexing="ij")
        d2 = (X ** 2 + Y ** 2) / w ** 2
        inside = d2 < 1
        z = c + X[inside] + 1j * Y[inside]
        phi = (1 - d2[inside]) ** 2
        grid = np.sum(phi * dc.xi_density(P, z)) * (x[1] - x[0]) ** 2
        assert dc.bump_integral(P, c, w) == pytest.approx(grid, rel=1e-4)

    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            dc.annulus_integral(P, 0.4, 0.8)
