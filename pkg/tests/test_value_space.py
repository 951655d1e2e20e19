import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovkit.errors import DegenerateInput, InvalidArgument
from besovkit.value_space import ValueSpace, e_norm, e_unit

orders = st.sampled_from([1.0, 1.5, 2.0, 3.0, np.inf])
comps = st.floats(-1e3, 1e3, allow_nan=False)


def vectors(d):
    return st.lists(st.tuples(comps, comps), min_size=d, max_size=d).map(
        lambda xs: np.array([a + 1j * b for a, b in xs]))


def test_zero_vector_has_zero_norm():
    for r in (1.0, 2.0, np.inf):
        assert e_norm(np.zeros(3), ValueSpace(3, r)) == 0.0


def test_pythagorean():
    assert e_norm([3, 4], ValueSpace(2)) == pytest.approx(5.0, abs=1e-15)


def test_one_norm_sums_moduli():
    assert e_norm([1, 1, 1], ValueSpace(3, 1.0)) == 3.0


@pytest.mark.parametrize("v,r,expected", [
    ([2, 0], 2.0, [1, 0]),
    ([0, 5], 2.0, [0, 1]),
    ([1, 1], 1.0, [0.5, 0.5]),
])
def test_unit_examples(v, r, expected):
    np.testing.assert_allclose(e_unit(v, ValueSpace(2, r)), expected, atol=1e-15)


def test_unit_of_zero_is_degenerate():
    with pytest.raises(DegenerateInput):
        e_unit([0, 0], ValueSpace(2))


def test_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        e_norm([1, 2, 3], ValueSpace(2))


@pytest.mark.parametrize("bad", [{"dim": 0}, {"dim": 2, "r": 0.5}])
def test_invalid_spaces(bad):
    with pytest.raises(InvalidArgument):
        ValueSpace(**bad)


def test_norm_kind_labels():
    assert ValueSpace(2).norm_kind == "euclidean"
    assert ValueSpace(2, 1.0).norm_kind == "p_norm(1)"


@given(st.integers(1, 4).flatmap(lambda d: st.tuples(st.just(d), vectors(d), vectors(d))), orders,
       st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_homogeneity_and_triangle(data, r, c):
    d, v, w = data
    E = ValueSpace(d, r)
    nv = e_norm(v, E)
    assert e_norm(c * v, E) == pytest.approx(abs(c) * nv, rel=1e-14, abs=1e-300)
    assert e_norm(v + w, E) <= nv + e_norm(w, E) + 1e-12 * (1 + nv)


@given(st.integers(1, 4).flatmap(lambda d: st.tuples(st.just(d), vectors(d))), orders)
def test_unit_has_norm_one(data, r):
    d, v = data
    E = ValueSpace(d, r)
    if e_norm(v, E) > 1e-100:
        assert e_norm(e_unit(v, E), E) == pytest.approx(1.0, abs=1e-12)


def test_p_norm_matches_formula(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    for r in (1.0, 1.5, 3.0):
        assert e_norm(v, ValueSpace(4, r)) == pytest.approx(np.sum(np.abs(v) ** r) ** (1 / r), rel=1e-14)
    assert e_norm(v, ValueSpace(4, np.inf)) == np.abs(v).max()
