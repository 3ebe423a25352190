import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvqerr.bath import (KernelTable, SpectralDensity, common_bath_influence,
                         counter_term_coefficient, discrete_kernel_table, discrete_kernels,
                         discretize_spectral_density, influence_action, influence_estimate_ratio,
                         influence_from_sz, kernel_ki, kernel_kr, kernel_support_width,
                         random_paths, spectral_density_eval, tabulate_kernels, triangle_weights)
from fvqerr.spin_coherent import DiscretizedPath

OHMIC = SpectralDensity(eta=0.3, s=1, omega_c=1.5, Omega=2.0)


def ki_closed_form(sd, tau):
    # (eta / (pi omega_c^2)) Im (1/Omega - i tau)^(-2)
    return sd.eta / (np.pi * sd.omega_c ** 2) * np.imag((1 / sd.Omega - 1j * tau) ** -2.0)


class TestSpectralDensity:
    def test_examples(self):
        assert spectral_density_eval(SpectralDensity(eta=0.0), 1.3) == 0
        sd = SpectralDensity(eta=0.2, s=1, omega_c=2.0, Omega=3.0)
        assert spectral_density_eval(sd, 3.0) == pytest.approx(0.2 * 3.0 / 4.0 * np.exp(-1))
        hard = SpectralDensity(eta=0.2, Omega=3.0, cutoff_form="hard")
        assert spectral_density_eval(hard, 6.0) == 0

    def test_validation(self):
        for kw in ({"eta": -1}, {"eta": 1, "Omega": 0}, {"eta": 1, "omega_c": 0},
                   {"eta": 1, "temperature": -1}, {"eta": 1, "cutoff_form": "gauss"}):
            with pytest.raises(ValueError):
                SpectralDensity(**kw)
        with pytest.raises(ValueError):
            spectral_density_eval(OHMIC, -1.0)


class TestKernels:
    def test_ki_closed_form(self):
        taus = np.linspace(0.05, 20 / OHMIC.Omega, 25)
        got = np.array([kernel_ki(OHMIC, t) for t in taus])
        np.testing.assert_allclose(got, ki_closed_form(OHMIC, taus), rtol=1e-8)
        # the closed form itself: 2 tau Omega^3 / (1 + Omega^2 tau^2)^2
        W = OHMIC.Omega
        np.testing.assert_allclose(ki_closed_form(OHMIC, taus),
                                   OHMIC.eta / (np.pi * OHMIC.omega_c ** 2) * 2 * taus * W ** 3
                                   / (1 + W ** 2 * taus ** 2) ** 2, rtol=1e-12)

    def test_ki_parity(self):
        assert kernel_ki(OHMIC, 0.0) == 0.0
        for t in (0.3, 1.7, 5.0):
            assert kernel_ki(OHMIC, -t) == -kernel_ki(OHMIC, t)

    def test_kr_parity_and_limit(self):
        sd = SpectralDensity(eta=0.3, Omega=2.0, temperature=0.4)
        for t in (0.3, 1.7):
            assert kernel_kr(sd, -t) == kernel_kr(sd, t)
        zero = SpectralDensity(eta=0.3, Omega=2.0)
        assert kernel_kr(zero, 0.9) == pytest.approx(
            kernel_kr(sd, 0.9, zero_temperature=True), rel=1e-10)

    def test_kr_zero_temperature_closed_form(self):
        # at T = 0 the Ohmic exponential-cutoff k_r is Re(1/Omega - i tau)^(-2) eta/(pi omega_c^2)
        sd = SpectralDensity(eta=0.3, omega_c=1.5, Omega=2.0)
        for t in (0.0, 0.4, 3.0):
            ref = sd.eta / (np.pi * sd.omega_c ** 2) * np.real((1 / sd.Omega - 1j * t) ** -2.0)
            assert kernel_kr(sd, t) == pytest.approx(ref, rel=1e-9)

    def test_kr_discrete_mode_oracle(self):
        sd = SpectralDensity(eta=0.2, Omega=1.0, temperature=2.0)
        omega, coupling = discretize_spectral_density(sd, 1000, "midpoint", omega_max=60.0)
        _, kr_discrete = discrete_kernels(omega, coupling, sd.temperature, np.array([0.0, 1.0]))
        for t, ref in zip((0.0, 1.0), kr_discrete):
            assert kernel_kr(sd, t) == pytest.approx(ref, rel=1e-3)

    def test_discrete_modes_converge(self):
        sd = SpectralDensity(eta=0.2, Omega=1.0, temperature=2.0)
        exact = kernel_kr(sd, 0.5)
        errs = []
        for n in (250, 500, 1000):
            omega, coupling = discretize_spectral_density(sd, n, "midpoint", omega_max=60.0)
            errs.append(abs(discrete_kernels(omega, coupling, sd.temperature, 0.5)[1] - exact))
        assert errs[1] < errs[0] / 2 and errs[2] < errs[1] / 2

    def test_kr_infrared_divergence_rejected(self):
        with pytest.raises(ValueError):
            kernel_kr(SpectralDensity(eta=0.1, s=0.0, temperature=1.0), 0.5)

    def test_eta_zero(self):
        sd = SpectralDensity(eta=0.0)
        assert kernel_ki(sd, 1.0) == 0 and kernel_kr(sd, 1.0) == 0

    def test_linear_in_eta(self):
        a = SpectralDensity(eta=0.1, temperature=0.5)
        b = a.with_eta(0.2)
        assert kernel_ki(b, 0.7) == pytest.approx(2 * kernel_ki(a, 0.7), rel=1e-12)
        assert kernel_kr(b, 0.7) == pytest.approx(2 * kernel_kr(a, 0.7), rel=1e-12)

    def test_counter_term_coefficient(self):
        # sum C^2/(2 m omega^2) over a fine discretization equals (1/pi) int J/omega
        omega, coupling = discretize_spectral_density(OHMIC, 4000, "midpoint", omega_max=80.0)
        assert counter_term_coefficient(OHMIC) == pytest.approx(
            np.sum(coupling ** 2 / (2 * omega ** 2)), rel=1e-5)

    def test_support_width(self):
        assert kernel_support_width(SpectralDensity(eta=1, Omega=2.0)) == 0.5
        assert kernel_support_width(SpectralDensity(eta=1, Omega=2.0, temperature=0.1)) == 10.0


class TestKernelTable:
    def test_csv_roundtrip(self, tmp_path):
        kt = tabulate_kernels(OHMIC, np.linspace(0, 3, 7))
        kt.to_csv(tmp_path / "k.csv")
        back = KernelTable.from_csv(tmp_path / "k.csv")
        np.testing.assert_array_equal(back.ki_values, kt.ki_values)
        np.testing.assert_array_equal(back.kr_values, kt.kr_values)

    def test_parity_and_range(self):
        kt = tabulate_kernels(OHMIC, np.linspace(0, 3, 31))
        assert kt.ki(-1.2) == -kt.ki(1.2)
        assert kt.kr(-1.2) == kt.kr(1.2)
        with pytest.raises(ValueError):
            kt.ki(4.0)

    def test_grid_must_start_at_zero(self):
        with pytest.raises(ValueError):
            KernelTable(np.array([0.1, 0.2]), np.zeros(2), np.zeros(2))


def constant_path(grid, th_f, th_b):
    n = grid.size
    return DiscretizedPath(grid, np.full(n, th_f), np.zeros(n), np.full(n, th_b), np.zeros(n))


class TestInfluence:
    grid = np.linspace(0, 6, 241)
    omega = np.array([0.7, 1.3, 2.2])
    coupling = np.array([0.3, 0.5, 0.2])
    kt = discrete_kernel_table(omega, coupling, 0.0, grid)

    def test_forward_equals_backward(self):
        rng = np.random.default_rng(0)
        for path in random_paths(rng, self.grid, 1, 3, 0.5, symmetric=True):
            pair = influence_action(self.kt, path)
            assert pair.s_i == 0 and pair.s_r == 0 and pair.s_ct == 0

    def test_opposite_poles_oracle(self):
        # S_z^f = 1/2, S_z^b = -1/2: S_i = 0, S_r = int_0^T (T-u) k_r(u) du
        pair = influence_action(self.kt, constant_path(self.grid, 0.0, np.pi))
        T = self.grid[-1]
        amp = self.coupling ** 2 / (2 * self.omega)
        ref = np.sum(amp * (1 - np.cos(self.omega * T)) / self.omega ** 2)
        assert abs(pair.s_i) < 1e-15
        assert pair.s_r == pytest.approx(ref, rel=1e-4)
        assert pair.s_ct == 0

    def test_triangle_weights(self):
        # area of the triangle is exact; int_0^2 int_0^t (t + s) ds dt = 4 converges as h^2
        assert np.sum(triangle_weights(np.linspace(0, 2, 11))) == pytest.approx(2.0, rel=1e-14)
        errs = []
        for n in (11, 21):
            g = np.linspace(0, 2, n)
            t, s = np.meshgrid(g, g, indexing="ij")
            errs.append(abs(np.sum(triangle_weights(g) * (t + s)) - 4.0))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-6)

    def test_sr_nonnegative_and_linear(self):
        rng = np.random.default_rng(1)
        doubled = self.kt.scaled(2.0)
        for path in random_paths(rng, self.grid, 1, 50, 0.7):
            a = influence_action(self.kt, path)
            b = influence_action(doubled, path)
            assert a.s_r >= -1e-12
            assert b.s_r == pytest.approx(2 * a.s_r, rel=1e-12)
            assert b.s_i == pytest.approx(2 * a.s_i, rel=1e-12, abs=1e-15)

    def test_eta_zero(self):
        rng = np.random.default_rng(2)
        path = random_paths(rng, self.grid, 1, 1, 0.5)[0]
        pair = influence_action(self.kt.scaled(0.0), path)
        assert pair.s_i == 0 and pair.s_r == 0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            influence_from_sz(self.kt, self.grid, np.zeros(3), np.zeros(3))

    def test_common_bath(self):
        rng = np.random.default_rng(3)
        path = random_paths(rng, self.grid, 1, 1, 0.5)[0]
        single = influence_action(self.kt, path)
        one = common_bath_influence(self.kt, path)
        assert one.phi == pytest.approx(single.phi, rel=1e-14)
        for n in (2, 3, 5):
            rep = lambda a: np.repeat(a, n, axis=1)
            shared = DiscretizedPath(self.grid, rep(path.theta_f), rep(path.phi_f),
                                     rep(path.theta_b), rep(path.phi_b))
            assert abs(common_bath_influence(self.kt, shared).phi - n * n * single.phi) <= \
                1e-10 * abs(n * n * single.phi)
        sym = random_paths(rng, self.grid, 4, 1, 0.5, symmetric=True)[0]
        assert common_bath_influence(self.kt, sym).phi == 0

    def test_estimate_ratio_stable_under_doubling(self):
        sd = SpectralDensity(eta=0.2, Omega=1.0, temperature=0.5)
        ratios = []
        for duration in (10.0, 20.0):
            grid = np.linspace(0, duration, int(duration * 8) + 1)
            kt = tabulate_kernels(sd, grid)
            rng = np.random.default_rng(4)
            paths = random_paths(rng, grid, 1, 40, 1.0)
            ratios.append(influence_estimate_ratio(kt, paths))
        for a, b in zip(*ratios):
            assert abs(b - a) < 0.5 * a

    def test_estimate_ratio_warns_for_short_paths(self):
        sd = SpectralDensity(eta=0.2, Omega=1.0)
        grid = np.linspace(0, 2, 21)
        kt = tabulate_kernels(sd, grid)
        paths = random_paths(np.random.default_rng(5), grid, 1, 2, 0.5)
        with pytest.warns(UserWarning):
            influence_estimate_ratio(kt, paths)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.2, 3.0))
def test_ki_odd_kr_even_discrete(tau, w):
    ki, kr = discrete_kernels([w], [0.4], 0.3, np.array([tau, -tau]))
    assert ki[0] == -ki[1] and kr[0] == kr[1]
