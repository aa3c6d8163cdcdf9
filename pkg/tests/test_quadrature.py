import numpy as np
import pytest
from hypothesis import given, strategies as st

from symcalc.errors import ConvergenceError
from symcalc.quadrature import adaptive_gauss, panel_rule, uniform_panels


@given(st.integers(0, 31), st.floats(-3, 3), st.floats(0.1, 4))
def test_panel_rule_exact_for_polynomials(deg, a, width):
    x, w = panel_rule([a, a + width / 2, a + width], order=16)
    got = w @ x**deg
    ref = ((a + width) ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
    assert got == pytest.approx(ref, rel=1e-11, abs=1e-11)


def test_uniform_panels_include_breakpoints():
    edges = uniform_panels(0.0, 1.0, 0.25, breakpoints=[0.33, 2.0])
    assert 0.33 in edges and edges[0] == 0.0 and edges[-1] == 1.0
    assert np.all(np.diff(edges) > 0)


def test_adaptive_handles_kink():
    res = adaptive_gauss(lambda x: np.abs(x - 0.3), 0.0, 1.0, tol=1e-13, rel=1e-13)
    assert float(res.value) == pytest.approx(0.3**2 / 2 + 0.7**2 / 2, abs=1e-12)


def test_adaptive_vector_valued():
    res = adaptive_gauss(lambda x: np.stack([np.sin(x), np.exp(-x)], axis=1), 0.0, np.pi,
                         tol=1e-14)
    np.testing.assert_allclose(res.value, [2.0, 1 - np.exp(-np.pi)], rtol=1e-12)


def test_adaptive_initial_edges():
    res = adaptive_gauss(lambda x: np.exp(-50 * x), 0.0, 10.0, initial=np.geomspace(1e-3, 5, 10))
    assert float(res.value) == pytest.approx(1 / 50, rel=1e-11)


def test_adaptive_budget_exhaustion():
    with pytest.raises(ConvergenceError):
        adaptive_gauss(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0.0, 1.0, tol=1e-15,
                       rel=1e-15, max_panels=50)
