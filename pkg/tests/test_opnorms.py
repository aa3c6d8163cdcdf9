import numpy as np
import pytest
from hypothesis import given, strategies as st

from symcalc import opnorms as on
from symcalc.errors import DomainError
from symcalc.semigroup import WeightedSpace, ehrenfest, random_markov_generator

seeds = st.integers(0, 2**31)


def _space(rng, n):
    return WeightedSpace(rng.uniform(0.2, 2.0, n))


def test_lp_norm_basic():
    space = WeightedSpace([0.5, 0.5])
    assert on.lp_norm(space, [3.0, -4.0], 2) == pytest.approx(np.sqrt(12.5))
    assert on.lp_norm(space, [3.0, -4.0], 1) == pytest.approx(3.5)
    assert on.lp_norm(space, [3.0, -4.0], np.inf) == 4.0
    assert on.lp_norm(space, [0.0, 0.0], 3) == 0.0
    with pytest.raises(DomainError):
        on.lp_norm(space, [1.0, 1.0], 0.5)


def test_lp_norm_no_overflow():
    space = WeightedSpace([1.0, 1.0])
    assert on.lp_norm(space, [1e200, 1e200], 8) == pytest.approx(1e200 * 2 ** (1 / 8))


@given(seeds, st.floats(1.0, 20.0), st.floats(1.0, 20.0))
def test_lp_norm_monotone_on_probability_space(seed, p1, p2):
    rng = np.random.default_rng(seed)
    nu = rng.uniform(0.1, 1.0, 6)
    space = WeightedSpace(nu / nu.sum())
    f = rng.standard_normal(6)
    lo, hi = sorted([p1, p2])
    assert on.lp_norm(space, f, lo) <= on.lp_norm(space, f, hi) * (1 + 1e-12)


def test_nu_adjoint_duality(rng):
    space = _space(rng, 5)
    B = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    f, g = rng.standard_normal(5), rng.standard_normal(5) + 1j
    lhs = on.pairing(space, B @ f, g)
    rhs = on.pairing(space, f, on.nu_adjoint(space, B) @ g)
    assert lhs == pytest.approx(rhs)


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_exact_norms_attained_by_witness(p, rng):
    space = _space(rng, 4)
    B = rng.standard_normal((4, 4))
    res = on.op_norm(space, B, p)
    assert res.method == "exact"
    ratio = on.lp_norm(space, B @ res.witness, p) / on.lp_norm(space, res.witness, p)
    assert ratio == pytest.approx(res.value, rel=1e-12)


@given(seeds, st.sampled_from([1.3, 1.5, 2.7, 4.0, 6.0]))
def test_power_iteration_witness_and_duality(seed, p):
    rng = np.random.default_rng(seed)
    space = _space(rng, 3)
    B = rng.standard_normal((3, 3))
    res = on.power_iteration_norm(space, B, p, multistarts=8)
    ratio = on.lp_norm(space, B @ res.witness, p) / on.lp_norm(space, res.witness, p)
    assert ratio == pytest.approx(res.value, rel=1e-10)
    dual = on.power_iteration_norm(space, on.nu_adjoint(space, B), p / (p - 1), multistarts=8)
    assert dual.value == pytest.approx(res.value, rel=1e-6)


@given(seeds)
def test_riesz_thorin_interpolation(seed):
    rng = np.random.default_rng(seed)
    space = _space(rng, 3)
    B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    n1 = on.op_norm(space, B, 1).value
    n2 = on.op_norm(space, B, 2).value
    # 1/p = 3/4 interpolates between 1 and 2 with weight 1/2
    n43 = on.op_norm(space, B, 4 / 3, on.NormRequest(4 / 3, multistarts=8)).value
    assert n43 <= np.sqrt(n1 * n2) * (1 + 1e-9)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_power_matches_grid_oracle(p, rng):
    for _ in range(3):
        space = _space(rng, 3)
        B = rng.standard_normal((3, 3))
        a = on.op_norm(space, B, p).value
        b = on.grid_oracle_norm(space, B, p).value
        assert a == pytest.approx(b, abs=1e-6)


def test_subspace_norm_full_space_agrees(rng):
    space = _space(rng, 4)
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    for p in (1.5, 2.0, 5.0):
        full = on.subspace_norm(space, B, np.eye(4), p).value
        ref = on.op_norm(space, B, p, on.NormRequest(p, field="complex")).value
        assert full == pytest.approx(ref, rel=1e-8)


def test_subspace_norm_on_range_of_generator():
    gen = ehrenfest(4)
    basis = gen.range_basis()
    # the identity has norm one on any subspace
    assert on.subspace_norm(gen.space, np.eye(gen.n), basis, 3.0).value == pytest.approx(1.0)


def test_markov_semigroup_norms_at_most_one(rng):
    gen = random_markov_generator(6, rng)
    T = gen.semigroup_matrix(0.4).real
    for p in (1, 1.7, 2, 5, np.inf):
        assert on.op_norm(gen.space, T, p).value <= 1 + 1e-10


def test_request_validation():
    with pytest.raises(DomainError):
        on.NormRequest(3.0, method="exact")
    with pytest.raises(DomainError):
        on.NormRequest(0.5)
    with pytest.raises(DomainError):
        on.NormRequest(2.0, method="magic")
