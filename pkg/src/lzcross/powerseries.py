"""Truncated power-series arithmetic: product, composition, reversion.

Coefficient arrays are ascending-degree, complex, and all operations
truncate at a fixed length n.  This is enough machinery to push Taylor data
through the stationary-phase change of variables exactly (no numerical
differentiation anywhere): compose a series with another, invert a series
with zero constant term (Lagrange reversion, done by triangular recursion),
and raise a series with positive leading coefficient to a fractional power.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mul", "compose", "revert", "fractional_power", "reciprocal", "derive"]


def _trim(a, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    a = np.asarray(a, dtype=complex)
    out[: min(n, a.size)] = a[:n]
    return out


def mul(a, b, n: int) -> np.ndarray:
    """Product truncated to n coefficients."""
    a = _trim(a, n)
    b = _trim(b, n)
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        if a[i] != 0:
            out[i:] += a[i] * b[: n - i]
    return out


def derive(a, n: int) -> np.ndarray:
    a = _trim(a, n + 1)
    return np.array([(i + 1) * a[i + 1] for i in range(n)], dtype=complex)


def compose(f, g, n: int) -> np.ndarray:
    """f(g(x)) truncated to n coefficients; requires g(0) = 0."""
    g = _trim(g, n)
    if g[0] != 0:
        raise ValueError("inner series must have zero constant term")
    f = _trim(f, n)
    # Horner from the top coefficient down keeps this O(n^2) products.
    out = np.zeros(n, dtype=complex)
    for c in f[::-1]:
        out = mul(out, g, n)
        out[0] += c
    return out


def revert(f, n: int) -> np.ndarray:
    """Compositional inverse g with f(g(y)) = y; needs f(0)=0, f'(0) != 0."""
    f = _trim(f, n)
    if f[0] != 0:
        raise ValueError("series must have zero constant term")
    if f[1] == 0:
        raise ValueError("series must have nonzero linear term")
    g = np.zeros(n, dtype=complex)
    if n > 1:
        g[1] = 1.0 / f[1]
    # Solve f(g(y)) = y degree by degree: the y^k coefficient of f(g) is
    # f[1]*g[k] plus terms involving only g[<k].
    for k in range(2, n):
        comp = compose(f[: k + 1], g, k + 1)
        g[k] = -comp[k] / f[1]
    return g


def reciprocal(a, n: int) -> np.ndarray:
    """1/a truncated to n coefficients; needs a(0) != 0."""
    a = _trim(a, n)
    if a[0] == 0:
        raise ValueError("series must have nonzero constant term")
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1]) / a[0]
    return out


def fractional_power(a, alpha: float, n: int) -> np.ndarray:
    """a^alpha for a series with real positive constant term.

    Binomial expansion of (1+u)^alpha applied to u = a/a0 - 1; exact on the
    truncation since u has zero constant term.
    """
    a = _trim(a, n)
    a0 = a[0]
    if not (a0.imag == 0 and a0.real > 0):
        raise ValueError("constant term must be real and positive")
    u = a / a0
    u[0] = 0.0
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0
    term = np.zeros(n, dtype=complex)
    term[0] = 1.0
    coef = 1.0
    for j in range(1, n):
        term = mul(term, u, n)
        coef *= (alpha - (j - 1)) / j
        if not term.any():
            break
        out += coef * term
    return (a0.real ** alpha) * out
