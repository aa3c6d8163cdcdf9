import numpy as np
import pytest
from hypothesis import given, strategies as st

from symcalc import semigroup as sg
from symcalc.bellman import phi_star_angle
from symcalc.errors import DomainError

seeds = st.integers(0, 2**31)


def test_two_point_spectrum():
    gen = sg.two_point()
    np.testing.assert_allclose(gen.eigenvalues, [0.0, 2.0], atol=1e-15)
    np.testing.assert_allclose(gen.matrix, [[1, -1], [-1, 1]])
    assert gen.spectral_gap == pytest.approx(2.0)


@pytest.mark.parametrize("n", [1, 2, 4, 7, 12])
def test_ehrenfest_spectrum(n):
    gen = sg.ehrenfest(n)
    np.testing.assert_allclose(np.sort(gen.eigenvalues), 2 * np.arange(n + 1) / n, atol=1e-12)
    assert gen.nu.sum() == pytest.approx(1.0)


def test_eigenvectors_nu_orthonormal(rng):
    gen = sg.random_markov_generator(9, rng)
    E = gen.eigenvectors
    np.testing.assert_allclose(E.T @ (gen.nu[:, None] * E), np.eye(9), atol=1e-12)
    np.testing.assert_allclose(gen.matrix @ E, E * gen.eigenvalues, atol=1e-11)


def test_rejects_non_self_adjoint():
    space = sg.WeightedSpace([1.0, 2.0])
    with pytest.raises(DomainError):
        sg.Generator(space, [[1.0, -1.0], [-1.0, 1.0]])


def test_rejects_negative_spectrum():
    space = sg.WeightedSpace([1.0, 1.0])
    with pytest.raises(DomainError):
        sg.Generator(space, [[-1.0, 0.0], [0.0, 1.0]])


def test_rejects_non_contractive_generator():
    # self-adjoint and nonnegative, but exp(-tA) is not an L^inf contraction
    space = sg.WeightedSpace([1.0, 1.0])
    A = np.array([[1.0, 2.0], [2.0, 4.0]]) / 5.0
    with pytest.raises(DomainError):
        sg.Generator(space, A)


def test_weights_validated():
    with pytest.raises(DomainError):
        sg.WeightedSpace([1.0, 0.0])


@given(seeds, st.floats(0.0, 5.0), st.floats(-1.5, 1.5))
def test_semigroup_law(seed, t, angle):
    rng = np.random.default_rng(seed)
    gen = sg.random_markov_generator(int(rng.integers(2, 8)), rng)
    z1 = t * np.exp(1j * angle)
    z2 = 0.3 * np.exp(-1j * angle / 2)
    f = rng.standard_normal(gen.n) + 1j * rng.standard_normal(gen.n)
    lhs = sg.evolve(gen, z1 + z2, f)
    rhs = sg.evolve(gen, z1, sg.evolve(gen, z2, f))
    np.testing.assert_allclose(lhs, rhs, atol=1e-11 * max(1, np.abs(f).max()))


def test_evolve_matches_expm(rng):
    from scipy.linalg import expm
    gen = sg.random_markov_generator(6, rng)
    f = rng.standard_normal(6)
    z = 0.7 - 0.4j
    np.testing.assert_allclose(sg.evolve(gen, z, f), expm(-z * gen.matrix) @ f, atol=1e-12)
    with pytest.raises(DomainError):
        sg.evolve(gen, -0.1, f)


def test_evolve_path_shape(rng):
    gen = sg.ehrenfest(5)
    f = rng.standard_normal(gen.n)
    path = sg.evolve_path(gen, [0.0, 1.0, 2.0j + 1], f)
    assert path.shape == (3, gen.n)
    np.testing.assert_allclose(path[0], f, atol=1e-13)


@given(seeds, st.floats(1e-3, 100.0))
def test_markov_semigroup_is_stochastic_contraction(seed, t):
    rng = np.random.default_rng(seed)
    gen = sg.random_markov_generator(int(rng.integers(2, 10)), rng)
    T = gen.semigroup_matrix(t).real
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-11)
    assert T.min() > -1e-12
    sg.check_contraction(gen.space, T, tol=1e-11)


def test_check_contraction_rejects():
    space = sg.WeightedSpace([1.0, 1.0])
    with pytest.raises(DomainError):
        sg.check_contraction(space, 1.1 * np.eye(2))
    with pytest.raises(DomainError):
        sg.check_contraction(space, np.array([[0.5, 0.2], [0.1, 0.5]]))


def test_projection_P0_averages(rng):
    gen = sg.random_markov_generator(7, rng)
    f = rng.standard_normal(7)
    mean = gen.nu @ f / gen.nu.sum()
    np.testing.assert_allclose(sg.projection_P0(gen, f), mean, atol=1e-12)


def test_multiplier_value_at_zero(rng):
    gen = sg.ehrenfest(3)
    f = rng.standard_normal(gen.n)
    one = sg.MultiplierSpec(lambda lam: np.ones_like(lam), value_at_zero=1.0)
    np.testing.assert_allclose(sg.apply_multiplier(gen, one, f), f, atol=1e-12)
    proj = sg.MultiplierSpec(lambda lam: np.ones_like(lam), value_at_zero=0.0)
    np.testing.assert_allclose(sg.apply_multiplier(gen, proj, f), f - sg.projection_P0(gen, f),
                               atol=1e-12)


@given(seeds, st.floats(-30, 30), st.floats(-30, 30))
def test_imaginary_powers_group(seed, s1, s2):
    rng = np.random.default_rng(seed)
    gen = sg.random_markov_generator(5, rng)
    A = sg.imaginary_power_matrix(gen, s1) @ sg.imaginary_power_matrix(gen, s2)
    np.testing.assert_allclose(A, sg.imaginary_power_matrix(gen, s1 + s2), atol=1e-10)


def test_imaginary_power_unitary_on_range(rng):
    gen = sg.ehrenfest(6)
    f = rng.standard_normal(gen.n) + 0j
    f -= sg.projection_P0(gen, f)
    g = sg.imaginary_power(gen, 4.2, f)
    assert np.sum(gen.nu * np.abs(g) ** 2) == pytest.approx(np.sum(gen.nu * np.abs(f) ** 2))


def test_linear_modulus_dominates(rng):
    gen = sg.random_markov_generator(5, rng)
    T = gen.semigroup_matrix(0.3 + 0.8j)
    M = sg.linear_modulus(T)
    f = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert np.all(np.abs(T @ f) <= M @ np.abs(f) + 1e-14)


@given(seeds, st.floats(1.1, 12.0))
def test_sectoriality(seed, p):
    rng = np.random.default_rng(seed)
    gen = sg.random_markov_generator(int(rng.integers(2, 9)), rng)
    f = rng.standard_normal(gen.n) + 1j * rng.standard_normal(gen.n)
    w = sg.sectorial_form(gen, f, p)
    assert abs(w.imag) <= np.tan(phi_star_angle(p)) * w.real + 1e-10 * abs(w)


def test_json_roundtrip(rng):
    gen = sg.random_markov_generator(4, rng)
    back = sg.Generator.from_json(gen.to_json())
    np.testing.assert_array_equal(back.matrix, gen.matrix)
    np.testing.assert_array_equal(back.nu, gen.nu)
