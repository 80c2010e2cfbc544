"""Degenerate stationary phase: normal form, expansion, closed-form constants.

For a real polynomial phase phi whose derivative vanishes only at 0 in the
interval, with phi - phi(0) vanishing to order k >= 2 there, the integral

    integral a(x) * exp(i*phi(x)/h) dx

has a complete expansion in powers h^((l+1)/k).  The change of variables
y(x) = x * phi_tilde(x)^(1/k) straightens the phase to sgn * y^k, and the
coefficients involve derivatives at 0 of a_phi(y) = a(x(y)) / y'(x(y)),
which we obtain exactly by truncated power-series composition and reversion
(:mod:`.powerseries`), never by numerical differentiation.

The same coefficients specialize to the closed-form leading constants of
the avoided-crossing transition integrals (:func:`omega_tilde0`,
:func:`omega_m`) and their unimodular/cosine prefactors (:func:`eta`,
:func:`eta_m`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import powerseries as ps
from .errors import ContactOrderTooLow, ExtraStationaryPoint, NotDegenerate
from .model import SmoothFunction, vanishing_order

__all__ = [
    "PhaseNormalForm",
    "DspExpansion",
    "phase_normal_form",
    "a_phi_derivatives",
    "dsp_expansion",
    "eta",
    "eta_m",
    "omega_tilde0",
    "omega_m",
]

# math.gamma is a Lanczos-class implementation, good to ~1 ulp on (0, 5].
_gamma = math.gamma


@dataclass(frozen=True)
class PhaseNormalForm:
    """Normal-form data of a degenerate phase at its stationary point 0.

    k is the vanishing order of phi - phi(0) at 0 (so phi' vanishes to
    order k-1), sign = sgn(phi^(k)(0)), and y is the smooth change of
    variables with  phi(x) - phi(0) = sign * y(x)^k,  y(0) = 0,
    y'(0) = phi_tilde(0)^(1/k) > 0.  phi_tilde is the deflated polynomial
    sign * (phi - phi(0)) / x^k (exact coefficient shift), positive near 0;
    y and y_prime are valid wherever phi_tilde stays positive.
    """

    k: int
    sign: int
    phi0: float
    phi_tilde: SmoothFunction
    y_series: np.ndarray      # ascending Taylor coefficients of y at 0 (real data)

    def y(self, x):
        x = np.asarray(x, dtype=float)
        return x * np.power(self.phi_tilde(x), 1.0 / self.k)

    def y_prime(self, x):
        x = np.asarray(x, dtype=float)
        pt = self.phi_tilde(x)
        dpt = self.phi_tilde.derivative()(x)
        return np.power(pt, 1.0 / self.k) + x * dpt / self.k * np.power(pt, 1.0 / self.k - 1.0)


def phase_normal_form(phi: SmoothFunction, series_order: int = 24) -> PhaseNormalForm:
    """Normal form of a polynomial phase with a single stationary point at 0.

    Raises :class:`NotDegenerate` if phi'(0) != 0 and
    :class:`ExtraStationaryPoint` if phi' has another zero in the interval
    (exact root isolation).
    """
    shifted = phi - phi(0.0)
    k = vanishing_order(shifted)
    if k is math.inf:
        raise NotDegenerate("phase is constant")
    k = int(k)
    if k < 2:
        raise NotDegenerate("phi'(0) != 0: no stationary point at 0")
    dphi = phi.derivative()
    others = dphi.shifted_down(k - 1).real_roots_in(*phi.domain)
    others = [r for r in others if r != 0.0]
    if others:
        raise ExtraStationaryPoint(f"phi' vanishes at {others}")

    lead = shifted.deriv_at(k)  # = phi^(k)(0)
    sign = 1 if lead > 0 else -1
    phi_tilde = float(sign) * shifted.shifted_down(k)
    # y = x * phi_tilde^{1/k} as a truncated series
    pt_series = phi_tilde.taylor(series_order)
    root = ps.fractional_power(pt_series, 1.0 / k, series_order)
    y_series = np.concatenate([[0.0 + 0j], root])[:series_order]
    return PhaseNormalForm(k=k, sign=sign, phi0=float(phi(0.0)),
                           phi_tilde=phi_tilde, y_series=y_series)


def _amplitude_series(a, order: int) -> np.ndarray:
    """Taylor coefficients at 0 from a SmoothFunction or a coefficient array."""
    if isinstance(a, SmoothFunction):
        return a.taylor(order).astype(complex)
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 1:
        raise TypeError("amplitude must be a SmoothFunction or 1-d Taylor coefficients")
    out = np.zeros(order, dtype=complex)
    out[: min(order, arr.size)] = arr[:order]
    return out


def a_phi_derivatives(a, nf: PhaseNormalForm, N: int) -> list[complex]:
    """Derivatives (a_phi)^(l)(0) for l = 0..N with a_phi(y(x)) = a(x)/y'(x).

    ``a`` is a SmoothFunction (or raw Taylor coefficients at 0): a smooth
    cutoff factor that is identically 1 near 0 does not change any of these
    derivatives, so amplitudes of the form chi * W are represented by W.
    """
    order = max(N + 1, nf.y_series.size)
    a_ser = _amplitude_series(a, order)
    y_ser = ps._trim(nf.y_series, order)
    dy_ser = np.concatenate([ps.derive(y_ser, order - 1), [0.0]])
    c_ser = ps.mul(a_ser, ps.reciprocal(dy_ser, order), order)   # a(x)/y'(x)
    x_of_y = ps.revert(y_ser, order)
    aphi = ps.compose(c_ser, x_of_y, order)
    return [aphi[l] * math.factorial(l) for l in range(N + 1)]


@dataclass(frozen=True)
class DspExpansion:
    """A truncated stationary-phase expansion.

    ``terms`` holds (l, coefficient, h_power) with value(h) =
    e^{i phi(0)/h} * sum coeff * h^power; the first omitted term has
    exponent ``remainder_exponent``.  Odd k uses powers (l+1)/k for
    l = 0..N-1; even k uses (2l+1)/k (odd derivatives of the transformed
    amplitude integrate to zero against the even phase).
    """

    terms: tuple[tuple[int, complex, Fraction], ...]
    order_N: int
    k: int
    phi0: float

    @property
    def remainder_exponent(self) -> Fraction:
        if self.k % 2 == 1:
            return Fraction(self.order_N + 1, self.k)
        return Fraction(2 * self.order_N + 1, self.k)

    def partial_sum(self, h: float) -> complex:
        s = sum((c * h ** float(p) for _, c, p in self.terms), complex(0.0))
        if self.phi0 != 0.0:
            s *= complex(np.exp(1j * self.phi0 / h))
        return complex(s)

    def term_coefficient(self, l: int) -> complex:
        for ll, c, _ in self.terms:
            if ll == l:
                return c
        raise KeyError(f"no term with index {l}")

    def coefficient_for_derivative(self, d: int) -> complex:
        """Coefficient of the term built from the d-th transformed-amplitude
        derivative (term index d for odd k, d/2 for even k where odd
        derivatives drop out)."""
        if self.k % 2 == 1:
            return self.term_coefficient(d)
        if d % 2 == 1:
            return 0.0 + 0.0j
        return self.term_coefficient(d // 2)


def dsp_expansion(a, phi: SmoothFunction, h: float, N: int) -> tuple[complex, DspExpansion]:
    """N-term degenerate stationary-phase value of integral a e^{i phi/h}.

    ``a`` as in :func:`a_phi_derivatives` (the compact cutoff factor is
    implicit).  Returns (partial sum at h, expansion object); the true
    integral differs by O(h^remainder_exponent).
    """
    nf = phase_normal_form(phi)
    k = nf.k
    if k % 2 == 1:
        derivs = a_phi_derivatives(a, nf, max(N - 1, 0))
        terms = []
        for l in range(N):
            coef = (2.0 / k) * (1j ** l) * derivs[l] / math.factorial(l) \
                * _gamma((l + 1) / k) * math.cos((1 - (k - 1) * l) * math.pi / (2 * k))
            terms.append((l, complex(coef), Fraction(l + 1, k)))
    else:
        derivs = a_phi_derivatives(a, nf, max(2 * N - 2, 0))
        terms = []
        for l in range(N):
            coef = (2.0 / k) * derivs[2 * l] / math.factorial(2 * l) \
                * _gamma((2 * l + 1) / k) \
                * complex(np.exp(nf.sign * 1j * math.pi * (2 * l + 1) / (2 * k)))
            terms.append((l, complex(coef), Fraction(2 * l + 1, k)))
    exp = DspExpansion(terms=tuple(terms), order_N=N, k=k, phi0=nf.phi0)
    return exp.partial_sum(h), exp


def eta(m: int, n: int, sgn_q: int = 1) -> complex:
    """The unimodular/cosine prefactor of the transition constants.

        m even            : i^n * cos((1 - m*n) * pi / (2(m+1)))
        m odd, n even     : exp(sgn_q * i * (n+1) * pi / (2(m+1)))
        m odd, n odd      : exp(sgn_q * i * (n+2) * pi / (2(m+1)))

    ``sgn_q`` is the sign the caller attributes to the leading derivative of
    the phase-derivative Q at 0 (ignored for even m).  Vanishes exactly when
    m is even and (n+1)*m is a positive multiple of 2(m+1).
    """
    if m < 1 or n < 0:
        raise ValueError("need m >= 1 and n >= 0")
    if m % 2 == 0:
        val = (1j ** n) * math.cos((1 - m * n) * math.pi / (2 * (m + 1)))
        # snap the exactly-vanishing lattice points to zero
        if (n + 1) * m % (2 * (m + 1)) == 0:
            val = 0.0 + 0.0j
        return complex(val)
    if sgn_q not in (-1, 1):
        raise ValueError("sgn_q must be +-1 for odd m")
    shift = n + 1 if n % 2 == 0 else n + 2
    return complex(np.exp(sgn_q * 1j * shift * math.pi / (2 * (m + 1))))


def eta_m(m: int, sign_gap: int = 1) -> complex:
    """Equal-coupling specialization of :func:`eta` at n = 0.

    cos(pi / (2(m+1))) for even m; exp(sign_gap * i pi / (2(m+1))) for odd
    m, with ``sign_gap`` the sign of the m-th derivative of V1 - V2 at 0.
    """
    if m % 2 == 0:
        return complex(math.cos(math.pi / (2 * (m + 1))))
    return eta(m, 0, sign_gap)


def _leading_sign(Q: SmoothFunction, n: int, m: int, convention: str) -> int:
    """Sign entering the odd-m eta factor.

    "leading" (default) uses sgn(Q^(m)(0)), the sign of the leading
    derivative of the phase derivative, which is the one consistent with
    the even-order expansion phase factor and with the n = 0 closed form.
    "literal" uses sgn(Q^(n)(0)) as an alternative reading; for n < m that
    derivative vanishes and the sign degenerates to +1.  The quadrature
    cross-checks in the test suite select "leading".
    """
    if convention == "leading":
        v = Q.deriv_at(m)
    elif convention == "literal":
        v = Q.deriv_at(n)
    else:
        raise ValueError("convention must be 'leading' or 'literal'")
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 1


def omega_tilde0(m: int, n: int, W: SmoothFunction, Q: SmoothFunction,
                 sign_convention: str = "leading") -> complex:
    """Closed-form limit constant of the normalized transition integral.

    With q_m = |Q^(m)(0)| and beta = (m+1)!/q_m:

      m*n even:
        2 eta(m,n) W^(n)(0) / ((m+1) n!) * beta^((n+1)/(m+1))
            * Gamma((n+1)/(m+1))
      m, n both odd (the integral itself is O(h^(1/(m+1))); this is the
      constant multiplying that power):
        2 eta(m,n) / ((m+1)(n+1)!) * beta^((n+2)/(m+1)) * Gamma((n+2)/(m+1))
            * ( W^(n+1)(0) - (n+1)(n+2) Q^(m+1)(0)
                              / ((m+1)(m+2) Q^(m)(0)) * W^(n)(0) )

    The correction ratio divides by the leading derivative Q^(m)(0) (the
    only one that is nonzero at a contact of order m).
    """
    if vanishing_order(Q) != m:
        raise ValueError(f"Q must vanish to order exactly {m} at 0")
    if vanishing_order(W) != n:
        raise ValueError(f"W must vanish to order exactly {n} at 0")
    qm = Q.deriv_at(m)
    beta = math.factorial(m + 1) / abs(qm)
    et = eta(m, n, _leading_sign(Q, n, m, sign_convention))
    if (m % 2 == 0) or (n % 2 == 0):
        return complex(
            2.0 * et * W.deriv_at(n) / ((m + 1) * math.factorial(n))
            * beta ** ((n + 1) / (m + 1)) * _gamma((n + 1) / (m + 1))
        )
    bracket = W.deriv_at(n + 1) - (
        (n + 1) * (n + 2) * Q.deriv_at(m + 1) / ((m + 1) * (m + 2) * qm)
    ) * W.deriv_at(n)
    return complex(
        2.0 * et / ((m + 1) * math.factorial(n + 1))
        * beta ** ((n + 2) / (m + 1)) * _gamma((n + 2) / (m + 1)) * bracket
    )


def omega_m(V1: SmoothFunction, V2: SmoothFunction) -> complex:
    """Leading transition constant for constant equal couplings.

        2 * eta_m * ((m+1)! / |V1^(m)(0) - V2^(m)(0)|)^(1/(m+1))
          * Gamma((m+2)/(m+1))

    valid for contact order m >= 2 (the transversal m = 1 case goes through
    :func:`omega_tilde0` directly).  Identical to
    omega_tilde0(m, 0, 1, V1 - V2) via Gamma((m+2)/(m+1)) =
    Gamma(1/(m+1))/(m+1).
    """
    gap = V1 - V2
    m = vanishing_order(gap)
    if m is math.inf or int(m) < 2:
        raise ContactOrderTooLow(f"contact order {m} < 2")
    m = int(m)
    lead = gap.deriv_at(m)
    sign = 1 if lead > 0 else -1
    return complex(
        2.0 * eta_m(m, sign)
        * (math.factorial(m + 1) / abs(lead)) ** (1.0 / (m + 1))
        * _gamma((m + 2) / (m + 1))
    )
