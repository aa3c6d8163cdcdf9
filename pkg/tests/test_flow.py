import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symcalc import bellman as bl
from symcalc import flow as fl
from symcalc import semigroup as sg
from symcalc.calculus import laplace_type_multiplier
from symcalc.errors import DomainError
from symcalc.opnorms import lp_norm, pairing

PARAMS = bl.make_params(4.0, 0.25)


def _vec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _range(gen, f):
    return f - sg.projection_P0(gen, f)


def _setup(rng, gen=None, params=PARAMS, frac=0.7):
    gen = gen or sg.random_markov_generator(5, rng)
    return fl.FlowSetup(gen, params, frac * params.phi_p_eps, _vec(rng, gen.n), _vec(rng, gen.n))


def test_setup_rejects_wide_angle(rng):
    gen = sg.two_point()
    with pytest.raises(DomainError):
        fl.FlowSetup(gen, PARAMS, 1.01 * PARAMS.phi_p_eps, np.ones(2), np.ones(2))
    with pytest.raises(DomainError):
        fl.FlowSetup(gen, PARAMS, 0.0, np.ones(3), np.ones(2))


def test_initial_value_bound(rng):
    for _ in range(20):
        s = _setup(rng)
        par = s.params
        bound = (1 + par.delta) * (lp_norm(s.gen.space, s.f, par.p) ** par.p
                                   + lp_norm(s.gen.space, s.g, par.q) ** par.q)
        assert fl.flow_E(s, 0.0) <= bound * (1 + 1e-12)


def test_zero_data_gives_zero(rng):
    gen = sg.ehrenfest(4)
    s = fl.FlowSetup(gen, PARAMS, 0.3, np.zeros(gen.n), np.zeros(gen.n))
    t = np.array([0.0, 0.5, 3.0])
    np.testing.assert_array_equal(fl.flow_E(s, t), 0.0)
    np.testing.assert_array_equal(fl.flow_E_derivative(s, t), 0.0)


def test_long_time_limit(rng):
    s = _setup(rng)
    nu = s.gen.nu
    u0, v0 = sg.projection_P0(s.gen, s.f), sg.projection_P0(s.gen, s.g)
    limit = bl.eval_Q(s.params, u0, v0) @ nu
    assert fl.flow_E(s, 60.0 / s.gen.spectral_gap) == pytest.approx(limit, rel=1e-10)


def test_E_nonincreasing(rng):
    for _ in range(10):
        s = _setup(rng)
        t = np.linspace(0, 10, 400)
        E = fl.flow_E(s, t)
        assert np.all(np.diff(E) <= 1e-10 * np.maximum(1.0, np.abs(E[:-1])))


@pytest.mark.parametrize("frac", [0.0, 0.5, -1.0])
def test_derivative_matches_difference(frac, rng):
    checked = 0
    for _ in range(10):
        s = _setup(rng, frac=frac)
        for t in (0.05, 0.4, 2.0):
            chk = fl.derivative_check(s, t)
            if chk.ok is not None:
                checked += 1
                assert chk.ok, chk
    assert checked > 10


def test_derivative_vanishes_on_null_space():
    gen = sg.ehrenfest(3)
    s = fl.FlowSetup(gen, PARAMS, 0.2, np.full(gen.n, 1.5 - 0.5j), np.zeros(gen.n))
    np.testing.assert_allclose(fl.flow_E_derivative(s, np.array([0.1, 1.0])), 0.0, atol=1e-14)


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.sampled_from([2.5, 4.0, 8.0]), st.floats(0.05, 0.45),
       st.floats(-1, 1))
def test_monotonicity_gap_nonnegative(seed, p, eps, frac):
    rng = np.random.default_rng(seed)
    par = bl.make_params(p, eps)
    s = _setup(rng, params=par, frac=frac)
    gap, scale = fl.monotonicity_gap(s, np.geomspace(1e-3, 20, 30), with_scale=True)
    assert np.all(gap >= -1e-9 * np.maximum(1.0, scale))


@pytest.mark.parametrize("frac", [0.0, 0.6, -1.0])
def test_two_point_closed_form(frac, rng):
    gen = sg.two_point()
    phi = frac * PARAMS.phi_p_eps
    for _ in range(5):
        f, g = _vec(rng, 2), _vec(rng, 2)
        got = fl.bilinear_integral(fl.FlowSetup(gen, PARAMS, phi, f, g))
        assert got == pytest.approx(fl.two_point_closed_form(gen, phi, f, g), rel=1e-10)


def test_pairing_routes_agree(rng):
    gen = sg.random_markov_generator(6, rng)
    f, g = _vec(rng, 6), _vec(rng, 6)
    t = np.geomspace(1e-3, 5, 17)
    a = fl.pairing_curve(gen, 0.4, f, g, t, "spectral")
    b = fl.pairing_curve(gen, 0.4, f, g, t, "evolve")
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12 * np.abs(a).max())
    with pytest.raises(DomainError):
        fl.pairing_curve(gen, 0.4, f, g, t, "other")


def test_bilinear_stable_under_tolerance(rng):
    s = _setup(rng)
    base = fl.bilinear_integral(s, detail=True)
    assert base.converged
    q = fl.ContourQuadrature.build(s.gen, s.phi, s.f, s.g, tail_rel=fl.TAIL_REL / 2,
                                   tol=fl.QUAD_REL / 2)
    assert fl.bilinear_integral(s, q) == pytest.approx(base.value, rel=1e-6)
    assert fl.bilinear_integral(s, route="evolve") == pytest.approx(base.value, rel=1e-6)


def test_bilinear_within_bound(rng):
    for _ in range(20):
        s = _setup(rng, frac=rng.uniform(-1, 1))
        par = s.params
        val = fl.bilinear_integral(s)
        norm = lp_norm(s.gen.space, s.f, par.p) * lp_norm(s.gen.space, s.g, par.q)
        assert val <= fl.bilinear_bound(par, s.phi) * norm


def test_bilinear_of_constants_is_zero():
    gen = sg.ehrenfest(3)
    s = fl.FlowSetup(gen, PARAMS, 0.0, np.ones(gen.n), np.ones(gen.n))
    assert fl.bilinear_integral(s) == pytest.approx(0.0, abs=1e-14)


@given(st.floats(1.1, 20.0), st.floats(0.1, 10.0), st.floats(0.01, 5.0),
       st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_embedding_constant_is_scaling_minimum(p, A0, B0, a, b):
    # the minimum over lam of the scaled bound is C a b
    got = fl.scaling_minimum(p, A0, B0, a, b)
    assert got == pytest.approx(fl.embedding_constant(p, A0, B0) * a * b, rel=1e-8)


@given(st.floats(2.01, 40.0), st.floats(0.01, 0.49), st.floats(-1, 1))
def test_embedding_constant_below_bound(p, eps, frac):
    par = bl.make_params(p, eps)
    phi = frac * par.phi_p_eps
    C = fl.embedding_constant(p, 1 + par.delta, 2 * par.delta * np.cos(phi))
    assert C <= fl.bilinear_bound(par, phi)


def test_prop_p4_identity_is_zero(rng):
    gen = sg.ehrenfest(4)
    f, g = _vec(rng, gen.n), _vec(rng, gen.n)
    assert fl.prop_p4_gap(gen.space, np.eye(gen.n), PARAMS, 0.3, f, g) == 0.0


def test_prop_p4_nonnegative_for_semigroup(rng):
    for _ in range(20):
        gen = sg.random_markov_generator(4, rng)
        T = gen.semigroup_matrix(rng.uniform(0.01, 3)).real
        f, g = _vec(rng, 4), _vec(rng, 4)
        phi = rng.uniform(-1, 1) * PARAMS.phi_p_eps
        assert fl.prop_p4_gap(gen.space, T, PARAMS, phi, f, g) >= -1e-10


def test_prop_p4_rejects_non_contraction():
    space = sg.WeightedSpace(np.array([1.0, 1.0]))
    T = np.array([[1.0, 2.0], [2.0, 4.0]]) / 5.0 * 1.2
    with pytest.raises(DomainError):
        fl.prop_p4_gap(space, T, PARAMS, 0.0, np.ones(2), np.ones(2))


def test_piecewise_constant_laplace_closed_form(rng):
    M = fl.random_piecewise_constant(rng)
    lam = np.geomspace(1e-2, 1e2, 9)
    np.testing.assert_allclose(laplace_type_multiplier(M, M.breaks)(lam), M.laplace(lam),
                               rtol=1e-11, atol=1e-13)


def test_laplace_bound_trivial_multipliers(rng):
    gen = sg.ehrenfest(5)
    f = _range(gen, _vec(rng, gen.n))
    p = 3.0
    zero = fl.laplace_transform_bound_check(gen, lambda t: np.zeros_like(t), p, f, M_sup=0.0)
    assert zero == pytest.approx(0.0, abs=1e-12)
    one = fl.laplace_transform_bound_check(gen, lambda t: np.ones_like(t), p, f)
    assert one == pytest.approx((120 * (p - 1) - 1) * lp_norm(gen.space, f, p), rel=1e-10)


def test_laplace_bound_random(rng):
    for p in (1.2, 2.0, 10.0):
        gen = sg.random_markov_generator(5, rng)
        M = fl.random_piecewise_constant(rng)
        assert fl.laplace_transform_bound_check(gen, M, p, _range(gen, _vec(rng, 5))) >= 0


def test_laplace_bound_requires_range():
    gen = sg.ehrenfest(2)
    with pytest.raises(DomainError):
        fl.laplace_transform_bound_check(gen, lambda t: np.ones_like(t), 2.0, np.ones(gen.n))


@pytest.mark.parametrize("theta", [0.0, 0.3, -0.3])
def test_subordination_identity(theta, rng):
    gen = sg.random_markov_generator(5, rng)
    f, g = _vec(rng, 5), _vec(rng, 5)
    got = fl.subordination_pairing(gen, lambda w: np.exp(-w), f, g, theta)
    m = sg.MultiplierSpec(lambda lam: lam / (1 + lam), 0.0)
    ref = pairing(gen.space, sg.apply_multiplier(gen, m, f), g)
    assert abs(got - ref) <= 1e-6 * abs(ref)


@pytest.mark.parametrize("s", [-6.0, -1.0, 0.5, 3.0, 6.0])
def test_subordinated_imaginary_power(s, rng):
    gen = sg.ehrenfest(5)
    f = _vec(rng, gen.n)
    got = fl.subordinated_imaginary_power(gen, s, f, phi=0.4)
    ref = sg.imaginary_power(gen, s, f)
    np.testing.assert_allclose(got, ref, rtol=1e-8, atol=1e-8 * np.abs(ref).max())


def test_imaginary_power_shape_bounded(rng):
    gen = sg.ehrenfest(6)
    fs = np.array([_vec(rng, gen.n) for _ in range(6)])
    s = np.linspace(-20, 20, 41)
    ratio = fl.imaginary_power_shape(gen, 3.0, s, fs, 0.25, 0.2)
    calib = ratio[np.isin(s, (-1.0, 1.0))].max()
    assert np.all(ratio <= 10 * calib)


def test_imaginary_power_isometric_at_p2(rng):
    gen = sg.random_markov_generator(6, rng)
    f = _range(gen, _vec(rng, 6))
    for s in (-3.0, 0.7, 12.0):
        assert lp_norm(gen.space, sg.imaginary_power(gen, s, f), 2.0) == pytest.approx(
            lp_norm(gen.space, f, 2.0), rel=1e-10)


@settings(max_examples=80)
@given(st.integers(0, 2**31), st.floats(1.05, 20.0))
def test_sectoriality(seed, p):
    rng = np.random.default_rng(seed)
    gen = sg.random_markov_generator(int(rng.integers(2, 7)), rng)
    f = _vec(rng, gen.n)
    w = sg.sectorial_form(gen, f, p)
    assert abs(w.imag) <= np.tan(bl.phi_star_angle(p)) * w.real + 1e-10 * abs(w)
