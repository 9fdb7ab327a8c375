import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtnlab.grid import ComplexField, GridError, make_grid, sponge_profile


def test_make_grid_valid():
    g = make_grid(40, 800, 0.005, 100, 0.25, 50)
    assert g.dx == pytest.approx(0.05, abs=1e-15)
    assert g.nsteps == 20000
    assert len(g.x) == 801


@pytest.mark.parametrize("args, msg", [
    ((-1, 800, 0.005, 100), "nonpositive domain"),
    ((0, 800, 0.005, 100), "nonpositive domain"),
    ((40, 8, 0.005, 100), "mesh too coarse"),
    ((40, 800, 0.0, 100), "time step"),
    ((40, 800, 0.005, 0.001), "horizon"),
    ((40, 800, 0.005, 100, 0.5), "sponge_fraction"),
    ((40, 800, 0.005, 100, 0.25, -1), "sponge strength"),
])
def test_make_grid_rejects(args, msg):
    with pytest.raises(GridError, match=msg):
        make_grid(*args)


def test_nodes_and_quadrature():
    g = make_grid(40, 800, 0.005, 1)
    assert np.array_equal(g.x, np.arange(801) * g.dx)
    assert abs(g.weights().sum() - 40.0) < 1e-12


def test_sponge_examples():
    g = make_grid(40, 800, 0.005, 1, 0.25, 50)
    assert sponge_profile(g, 0.0) == 0.0
    assert sponge_profile(g, 30.0) == 0.0
    assert sponge_profile(g, 40.0) == pytest.approx(50.0)
    # layer midpoint: ((35 - 30) / 10)^3 * 50
    assert sponge_profile(g, 35.0) == pytest.approx(50.0 / 8)


@given(frac=st.floats(0.0, 0.49), strength=st.floats(0.0, 200.0))
def test_sponge_continuous_nondecreasing(frac, strength):
    g = make_grid(10, 64, 0.01, 1, frac, strength)
    x = np.linspace(0, 10, 2001)
    s = sponge_profile(g, x)
    assert np.all(np.diff(s) >= -1e-12)
    assert s[0] == 0.0
    assert np.max(np.abs(np.diff(s))) <= strength * 3 * (x[1] - x[0]) / max(10 * frac, 1e-9) + 1e-9


def test_refined_halves_both_steps():
    g = make_grid(40, 400, 0.01, 2).refined(2)
    assert (g.nx, g.dt) == (800, 0.005)


def test_complex_field_zeros():
    g = make_grid(40, 800, 0.005, 1)
    f = ComplexField.zeros(g)
    assert f.values.shape == (801,) and f.is_finite()
