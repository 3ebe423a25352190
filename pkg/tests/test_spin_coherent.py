import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from fvqerr.errors import DimensionError
from fvqerr.operators import SX, SY, SZ
from fvqerr.spin_coherent import (BlochPoint, DiscretizedPath, SpinHamiltonianParams,
                                  SphereQuadrature, coherent_propagator, coherent_state_vector,
                                  interaction_lagrangian, kinetic_action, normalization, overlap,
                                  regularization_action, resolution_of_identity_residual,
                                  spin_matrix_element)

angles = st.tuples(st.floats(0, np.pi), st.floats(-10, 10))


def random_point(rng):
    return BlochPoint(np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi))


class TestBlochPoint:
    def test_phi_normalized(self):
        assert BlochPoint(1.0, -np.pi / 2).phi == pytest.approx(3 * np.pi / 2)
        assert 0 <= BlochPoint(0.3, -1e-17).phi < 2 * np.pi

    def test_theta_range(self):
        with pytest.raises(ValueError):
            BlochPoint(4.0, 0.0)

    def test_spin_vector(self):
        np.testing.assert_allclose(BlochPoint(np.pi / 2, 0).spin_vector, [0.5, 0, 0], atol=1e-16)


class TestCoherentState:
    def test_poles(self):
        np.testing.assert_allclose(coherent_state_vector(BlochPoint(0, 0)), [1, 0])
        np.testing.assert_allclose(coherent_state_vector(BlochPoint(np.pi, 0)), [0, 1], atol=1e-16)

    def test_equator(self):
        v = coherent_state_vector(BlochPoint(np.pi / 2, np.pi / 2))
        np.testing.assert_allclose(v, [np.exp(-1j * np.pi / 4) / np.sqrt(2),
                                       np.exp(1j * np.pi / 4) / np.sqrt(2)], atol=1e-15)

    def test_matches_rotation_definition(self):
        # |theta, phi> = exp(-i phi S_z) exp(-i theta S_y) |up>
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = random_point(rng)
            ref = expm(-1j * p.phi * SZ) @ expm(-1j * p.theta * SY) @ np.array([1, 0])
            np.testing.assert_allclose(coherent_state_vector(p), ref, atol=1e-14)

    @given(angles)
    def test_unit_norm(self, a):
        assert np.linalg.norm(coherent_state_vector(BlochPoint(*a))) == pytest.approx(1, abs=1e-14)


class TestOverlap:
    def test_examples(self):
        p = BlochPoint(0.7, 1.1)
        assert overlap(p, p) == pytest.approx(1)
        assert abs(overlap(BlochPoint(0, 0), BlochPoint(np.pi, 0))) < 1e-16
        assert overlap(BlochPoint(np.pi / 2, np.pi / 2), BlochPoint(np.pi / 2, 0)) == \
            pytest.approx(np.sqrt(2) / 2)

    @given(angles, angles)
    def test_closed_form_matches_vectors(self, a, b):
        p1, p2 = BlochPoint(*a), BlochPoint(*b)
        ref = np.vdot(coherent_state_vector(p1), coherent_state_vector(p2))
        assert abs(overlap(p1, p2) - ref) < 1e-13
        assert abs(overlap(p1, p2)) <= 1 + 1e-14

    def test_short_step_expansion_is_second_order(self):
        # <p'|p> = 1 + (i/2)(phi' - phi) cos(theta) + O(delta^2)
        p = BlochPoint(0.9, 0.4)
        errs = []
        for d in (1e-2, 5e-3):
            q = BlochPoint(p.theta + d, p.phi + d)
            errs.append(abs(overlap(q, p) - (1 + 0.5j * d * np.cos(p.theta))))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


class TestSpinMatrixElement:
    def test_examples(self):
        assert spin_matrix_element("z", BlochPoint(0, 0), BlochPoint(0, 0)) == pytest.approx(0.5)
        assert abs(spin_matrix_element("z", BlochPoint(np.pi / 2, 2.0), BlochPoint(np.pi / 2, 2.0))) < 1e-16
        assert spin_matrix_element("x", BlochPoint(np.pi / 2, 0), BlochPoint(np.pi / 2, 0)) == \
            pytest.approx(0.5)

    def test_against_operators(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p1, p2 = random_point(rng), random_point(rng)
            v1, v2 = coherent_state_vector(p1), coherent_state_vector(p2)
            for axis, op in zip("xyz", (SX, SY, SZ)):
                assert abs(spin_matrix_element(axis, p1, p2) - v1.conj() @ op @ v2) < 1e-14

    def test_diagonal_is_classical_spin(self):
        p = BlochPoint(1.2, 0.3)
        vals = [spin_matrix_element(a, p, p) for a in "xyz"]
        np.testing.assert_allclose(vals, p.spin_vector, atol=1e-15)


class TestQuadrature:
    def test_weights_total(self):
        assert SphereQuadrature.gauss_legendre(5, 7).weights.sum() == pytest.approx(2, abs=1e-12)

    def test_resolution_of_identity(self):
        assert resolution_of_identity_residual(SphereQuadrature.gauss_legendre(16, 32)) <= 1e-10
        assert resolution_of_identity_residual(SphereQuadrature.gauss_legendre(1, 1)) > 0.1

    def test_off_diagonal_vanishes(self):
        ident = SphereQuadrature.gauss_legendre(4, 8).identity_operator()
        assert abs(ident[0, 1]) < 1e-14


class TestPropagator:
    def test_zero_hamiltonian(self):
        q = SphereQuadrature.gauss_legendre(8, 16)
        params = SpinHamiltonianParams.constant([[0, 0, 0]], 1.0, n_steps=3)
        p = BlochPoint(0.4, 1.0)
        assert coherent_propagator(params, q, p, p) == pytest.approx(1, abs=1e-13)
        p2 = BlochPoint(2.0, 0.2)
        assert coherent_propagator(params, q, p, p2) == pytest.approx(overlap(p2, p), abs=1e-13)

    def test_precession_half_period(self):
        w0 = 1.7
        params = SpinHamiltonianParams.constant([[0, 0, w0]], np.pi / w0, n_steps=5)
        q = SphereQuadrature.gauss_legendre(8, 16)
        p = BlochPoint(np.pi / 2, 0)
        v = coherent_state_vector(p)
        ref = v.conj() @ expm(-1j * np.pi * SZ) @ v
        assert abs(coherent_propagator(params, q, p, p) - ref) < 1e-13
        assert abs(ref) < 1e-15  # the state precesses to its antipode

    @pytest.mark.parametrize("method", ["transfer", "factored"])
    def test_random_hamiltonians(self, method):
        rng = np.random.default_rng(3)
        q = SphereQuadrature.gauss_legendre(4, 8)
        for _ in range(10):
            mu = rng.normal(size=3)
            params = SpinHamiltonianParams.constant([mu], rng.uniform(0.1, 1) * np.pi / np.linalg.norm(mu),
                                                    n_steps=4)
            pi, pf = random_point(rng), random_point(rng)
            ref = coherent_state_vector(pf).conj() @ params.propagator() @ coherent_state_vector(pi)
            assert abs(coherent_propagator(params, q, pi, pf, method=method) - ref) < 1e-12

    def test_two_spins_with_coupling(self):
        rng = np.random.default_rng(4)
        kappa = np.zeros((2, 2, 3, 3))
        kappa[0, 1] = rng.normal(size=(3, 3))
        params = SpinHamiltonianParams.constant(rng.normal(size=(2, 3)), 1.0, kappa=kappa, n_steps=3)
        q = SphereQuadrature.gauss_legendre(4, 8)
        pi = [random_point(rng) for _ in range(2)]
        pf = [random_point(rng) for _ in range(2)]
        ref = np.kron(*[coherent_state_vector(p) for p in pf]).conj() @ params.propagator() @ \
            np.kron(*[coherent_state_vector(p) for p in pi])
        assert abs(coherent_propagator(params, q, pi, pf) - ref) < 1e-12

    def test_too_many_spins(self):
        params = SpinHamiltonianParams.constant(np.zeros((3, 3)), 1.0)
        with pytest.raises(DimensionError):
            coherent_propagator(params, SphereQuadrature.gauss_legendre(2, 2),
                                [BlochPoint(0)] * 3, [BlochPoint(0)] * 3, max_spins=2)

    def test_kappa_diagonal_rejected(self):
        kappa = np.zeros((2, 2, 3, 3))
        kappa[0, 0, 2, 2] = 1
        with pytest.raises(ValueError):
            SpinHamiltonianParams.constant(np.zeros((2, 3)), 1.0, kappa=kappa)


def loop_path(theta, n, epsilon=0.0, duration=1.0):
    grid = np.linspace(0, duration, n + 1)
    th = np.full(n + 1, theta)
    ph = np.linspace(0, 2 * np.pi, n + 1)
    return DiscretizedPath.symmetric(grid, th, ph, epsilon)


class TestPathActions:
    def test_kinetic_examples(self):
        grid = np.linspace(0, 1, 5)
        const = DiscretizedPath.symmetric(grid, np.full(5, 0.3), np.full(5, 1.0))
        assert kinetic_action(const) == (0.0, 0.0)
        assert abs(kinetic_action(loop_path(np.pi / 2, 16))[0]) < 1e-15
        assert kinetic_action(loop_path(np.pi / 4, 16))[0] == pytest.approx(np.pi * np.cos(np.pi / 4))

    def test_kinetic_antisymmetric_under_reversal(self):
        rng = np.random.default_rng(5)
        grid = np.linspace(0, 1, 30)
        th = np.arccos(rng.uniform(-1, 1, 30))
        ph = np.cumsum(rng.uniform(-0.5, 0.5, 30))
        path = DiscretizedPath.symmetric(grid, th, ph)
        assert kinetic_action(path.reversed())[0] == pytest.approx(-kinetic_action(path)[0])

    def test_area_law(self):
        # two paths from the north-ish point along different latitudes: the difference of
        # kinetic actions around the closed loop equals half the enclosed solid angle term
        n = 400
        f = kinetic_action(loop_path(np.pi / 3, n))[0]
        g = kinetic_action(loop_path(np.pi / 2, n))[0]
        # the band between colatitudes pi/3 and pi/2 has solid angle 2 pi (cos pi/3 - cos pi/2)
        assert f - g == pytest.approx(0.5 * 2 * np.pi * (np.cos(np.pi / 3) - 0), rel=1e-12)

    def test_regularization_examples(self):
        assert regularization_action(loop_path(1.0, 8, epsilon=0.0)) == (0.0, 0.0)
        grid = np.linspace(0, 1, 5)
        path = DiscretizedPath.symmetric(grid, np.full(5, np.pi / 2), np.linspace(0, np.pi, 5), 1.0)
        assert regularization_action(path)[0] == pytest.approx(np.pi ** 2 / 2)
        const = DiscretizedPath.symmetric(grid, np.full(5, 0.3), np.full(5, 0.2), 0.1)
        assert regularization_action(const) == (0.0, 0.0)

    @pytest.mark.parametrize("eps", [0.0, 1e-3, 1e-1])
    def test_regularization_nonnegative(self, eps):
        rng = np.random.default_rng(6)
        grid = np.linspace(0, 1, 11)
        path = DiscretizedPath(grid, *(rng.uniform(0, np.pi, 11) for _ in range(4)), epsilon=eps)
        assert min(regularization_action(path)) >= 0

    def test_normalization(self):
        grid = np.linspace(0, 1, 3)
        path = DiscretizedPath.symmetric(grid, np.full(3, np.pi / 2), np.zeros(3), 0.5)
        per_step = 0.5 / (2j * np.pi * 0.5)
        assert normalization(path) == pytest.approx(per_step ** 2)

    def test_interaction_lagrangian(self):
        p0 = SpinHamiltonianParams.constant([[0, 0, 0]], 1.0)
        assert interaction_lagrangian(p0, [BlochPoint(1, 1)], 0.5) == 0
        w0 = 2.5
        p1 = SpinHamiltonianParams.constant([[0, 0, w0]], 1.0)
        assert interaction_lagrangian(p1, [BlochPoint(0)], 0.5) == pytest.approx(-w0 / 2)
        kappa = np.zeros((2, 2, 3, 3))
        kappa[0, 1, 2, 2] = 0.8
        p2 = SpinHamiltonianParams.constant(np.zeros((2, 3)), 1.0, kappa=kappa)
        assert interaction_lagrangian(p2, [BlochPoint(0), BlochPoint(0)], 0.1) == pytest.approx(-0.2)

    def test_mismatched_branches(self):
        grid = np.linspace(0, 1, 3)
        with pytest.raises(ValueError):
            DiscretizedPath(grid, np.zeros(3), np.zeros(3), np.zeros(4), np.zeros(3))


@settings(max_examples=25)
@given(st.floats(0.05, 3.0), st.floats(0, np.pi), st.floats(0, 6.28))
def test_hamiltonian_is_energy_of_classical_spin(w, th, ph):
    # <p|H|p> equals -L_S for a linear Hamiltonian
    params = SpinHamiltonianParams.constant([[w, -0.5 * w, 0.3]], 1.0)
    p = BlochPoint(th, ph)
    v = coherent_state_vector(p)
    energy = (v.conj() @ params.hamiltonian(0) @ v).real
    assert energy == pytest.approx(-interaction_lagrangian(params, [p], 0.0), abs=1e-13)
