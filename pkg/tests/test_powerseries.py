import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lzcross import powerseries as ps


def test_mul_truncates():
    a = [1, 1]          # 1 + x
    b = [1, -1, 2]      # 1 - x + 2x^2
    out = ps.mul(a, b, 3)
    assert np.allclose(out, [1, 0, 1])


def test_compose_polynomials():
    # f(x) = 1 + x^2, g(x) = 2x + x^3: f(g) = 1 + 4x^2 + 4x^4 + ...
    out = ps.compose([1, 0, 1], [0, 2, 0, 1], 5)
    assert np.allclose(out, [1, 0, 4, 0, 4])


def test_revert_known_series():
    # f = x/(1-x) = x + x^2 + x^3 + ...; inverse is y/(1+y)
    n = 8
    f = np.ones(n, dtype=complex)
    f[0] = 0
    g = ps.revert(f, n)
    expect = [0] + [(-1) ** (k + 1) for k in range(1, n)]
    assert np.allclose(g, expect)


def test_reciprocal():
    a = [2, 1]
    r = ps.reciprocal(a, 6)
    expect = [0.5 * (-0.5) ** k for k in range(6)]
    assert np.allclose(r, expect)


def test_fractional_power_square_root():
    n = 10
    a = np.zeros(n)
    a[0], a[1] = 1.0, 1.0        # 1 + x
    r = ps.fractional_power(a, 0.5, n)
    assert np.allclose(ps.mul(r, r, n), a, atol=1e-12)


def test_fractional_power_rejects_nonpositive_lead():
    with pytest.raises(ValueError):
        ps.fractional_power([-1.0, 1.0], 0.5, 4)


series = st.lists(st.floats(min_value=-1, max_value=1), min_size=3, max_size=7)


@given(series, st.floats(min_value=0.8, max_value=1.5))
@settings(max_examples=60, deadline=None)
def test_revert_roundtrip(tail, lead):
    # reversion of float series is mildly ill-conditioned when the tail
    # coefficients grow, hence the loose absolute tolerance
    n = 9
    f = np.zeros(n, dtype=complex)
    f[1] = lead
    f[2 : 2 + len(tail)] = tail[: n - 2]
    g = ps.revert(f, n)
    ident = ps.compose(f, g, n)
    expect = np.zeros(n)
    expect[1] = 1.0
    assert np.allclose(ident, expect, atol=1e-7)
