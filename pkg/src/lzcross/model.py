"""Model definition: potentials, couplings, crossing geometry, scale parameters.

The system under study is a first-order 2x2 system on an interval I around 0,

    -i h w'(x) + H(x) w(x) = 0,      H = [[V1, eps1*U1], [eps2*U2, V2]],

whose diagonal entries V1, V2 cross at x = 0 with finite contact order m
(V1 - V2 vanishes to order m at 0 and nowhere else in I) and whose couplings
U1, U2 vanish to orders n1, n2 at 0.  All of V1, V2, U1, U2 are real
polynomials here, which makes every derivative and antiderivative exact; the
constructions only ever need finitely many derivatives at the crossing.

This module owns the input validation and all regime bookkeeping (the
mu_k / mu_{m,l} scale parameters and their derived quantities) so the
quadrature, asymptotics and solver modules can assume a well-formed model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import BadInterval, DegenerateModel

__all__ = [
    "SmoothFunction",
    "CutoffSpec",
    "CrossingGeometry",
    "SystemSpec",
    "ScaleParams",
    "Regime",
    "vanishing_order",
    "build_system",
    "scale_params",
    "classify_regime",
    "DEFAULT_INTERVAL",
    "DEFAULT_CUTOFF",
]

DEFAULT_INTERVAL = (-1.0, 1.0)


@dataclass(frozen=True)
class SmoothFunction:
    """A real polynomial on a closed interval, with exact derivative access.

    ``coeffs`` are ascending-degree coefficients; ``domain = (x_l, x_r)``
    must contain 0 in its interior.  Instances are immutable and cheap;
    arithmetic returns new instances on the same domain.
    """

    coeffs: tuple[float, ...]
    domain: tuple[float, float] = DEFAULT_INTERVAL

    def __post_init__(self):
        if len(self.coeffs) == 0:
            object.__setattr__(self, "coeffs", (0.0,))
        else:
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        x_l, x_r = self.domain
        if not (x_l < 0.0 < x_r):
            raise BadInterval(f"domain {self.domain} must contain 0 in its interior")

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def deriv_at(self, k: int, x0: float = 0.0) -> float:
        """Exact k-th derivative at ``x0`` (k >= 0)."""
        if x0 == 0.0:
            if k >= len(self.coeffs):
                return 0.0
            return math.factorial(k) * self.coeffs[k]
        return float(self.derivative(k)(x0))

    def taylor(self, n: int) -> np.ndarray:
        """First ``n`` Taylor coefficients at 0 (exactly the coefficients)."""
        out = np.zeros(n)
        m = min(n, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return out

    # -- calculus ----------------------------------------------------------

    def derivative(self, k: int = 1) -> "SmoothFunction":
        c = npoly.polyder(self.coeffs, m=k) if k > 0 else np.asarray(self.coeffs)
        return SmoothFunction(tuple(np.atleast_1d(c)), self.domain)

    def antiderivative(self) -> "SmoothFunction":
        """The antiderivative vanishing at 0 (exact coefficients)."""
        c = npoly.polyint(self.coeffs, lbnd=0.0)
        return SmoothFunction(tuple(np.atleast_1d(c)), self.domain)

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        o = other.coeffs if isinstance(other, SmoothFunction) else (float(other),)
        return SmoothFunction(tuple(npoly.polyadd(self.coeffs, o)), self.domain)

    def __sub__(self, other):
        o = other.coeffs if isinstance(other, SmoothFunction) else (float(other),)
        return SmoothFunction(tuple(npoly.polysub(self.coeffs, o)), self.domain)

    def __mul__(self, other):
        if isinstance(other, SmoothFunction):
            return SmoothFunction(tuple(npoly.polymul(self.coeffs, other.coeffs)), self.domain)
        return SmoothFunction(tuple(float(other) * c for c in self.coeffs), self.domain)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    # -- structure -----------------------------------------------------------

    @property
    def degree(self) -> int:
        nz = [i for i, c in enumerate(self.coeffs) if c != 0.0]
        return nz[-1] if nz else 0

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def shifted_down(self, k: int) -> "SmoothFunction":
        """Divide by x^k, assuming the first k coefficients vanish."""
        if any(c != 0.0 for c in self.coeffs[:k]):
            raise ValueError(f"not divisible by x^{k}")
        rest = self.coeffs[k:] or (0.0,)
        return SmoothFunction(rest, self.domain)

    def max_abs_on(self, lo: float | None = None, hi: float | None = None) -> float:
        """Upper estimate of max |f| on [lo, hi] from endpoints and interior
        critical points of f (exact for polynomials up to root accuracy)."""
        x_l, x_r = self.domain
        lo = x_l if lo is None else lo
        hi = x_r if hi is None else hi
        cand = [lo, hi]
        dc = npoly.polyder(self.coeffs)
        if np.atleast_1d(dc).size > 1 or (np.atleast_1d(dc).size == 1 and dc[0] != 0.0):
            roots = npoly.polyroots(dc) if np.atleast_1d(dc).size > 1 else []
            for r in np.atleast_1d(roots):
                if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                    cand.append(float(r.real))
        return float(max(abs(self(c)) for c in cand))

    def real_roots_in(self, lo: float, hi: float, exclude_zero: bool = False) -> list[float]:
        """Exact real-root isolation on [lo, hi].

        Coefficients are binary floats, hence exact rationals; sympy then
        isolates real roots without tolerance choices.  Used for the
        "vanishes only at x=0" style validation.
        """
        import sympy as sp

        x = sp.Symbol("x")
        poly = sum(sp.Rational(Fraction(c)) * x**i for i, c in enumerate(self.coeffs) if c != 0.0)
        if poly == 0:
            return []  # identically zero handled by callers
        out = []
        for r in sp.Poly(poly, x).real_roots():
            rv = float(r.evalf(30))
            if exclude_zero and r == 0:
                continue
            if lo <= rv <= hi:
                out.append(rv)
        return out


def vanishing_order(f: SmoothFunction, tol: float = 0.0):
    """Smallest k with |f^(k)(0)| > tol * max|coeff|; ``math.inf`` if none.

    With tol = 0 (the default, for exactly-entered polynomials) this is the
    index of the first nonzero coefficient.
    """
    scale = max((abs(c) for c in f.coeffs), default=0.0)
    for k, c in enumerate(f.coeffs):
        if abs(c) * math.factorial(k) > tol * scale:
            return k
    return math.inf


@dataclass(frozen=True)
class CutoffSpec:
    """Parameters of the smooth plateau cutoff chi.

    chi is 1 on [-r1, r1], 0 outside [-r2, r2], and in between follows the
    standard mollifier ratio psi(t) = f(t) / (f(t) + f(1-t)) with
    f(t) = exp(-1/t) for t > 0, evaluated at t = (r2 - |x|) / (r2 - r1).
    """

    r1: float = 0.3
    r2: float = 0.7

    def __post_init__(self):
        if not (0.0 < self.r1 < self.r2):
            raise BadInterval(f"need 0 < r1 < r2, got ({self.r1}, {self.r2})")

    def validate_inside(self, domain: tuple[float, float]) -> None:
        x_l, x_r = domain
        if not (x_l < -self.r2 and self.r2 < x_r):
            raise BadInterval(
                f"cutoff support [-{self.r2}, {self.r2}] must lie strictly inside {domain}"
            )

    def chi(self, x):
        """Vectorized evaluation of chi."""
        x = np.asarray(x, dtype=float)
        t = (self.r2 - np.abs(x)) / (self.r2 - self.r1)
        out = np.zeros_like(t)
        out[t >= 1.0] = 1.0
        mid = (t > 0.0) & (t < 1.0)
        tm = t[mid]
        f = np.exp(-1.0 / tm)
        g = np.exp(-1.0 / (1.0 - tm))
        out[mid] = f / (f + g)
        if out.ndim == 0:
            return float(out)
        return out

    __call__ = chi


DEFAULT_CUTOFF = CutoffSpec(0.3, 0.7)


@dataclass(frozen=True)
class CrossingGeometry:
    """Where and how the two diagonal symbols cross.

    The two characteristic curves xi = -V1(x) and xi = -V2(x) meet at
    rho0 = (0, -V0) with contact order m: the gap V1 - V2 vanishes to order
    exactly m at 0, with m-th derivative ``leading_gap`` there.
    """

    V0: float
    m: int
    leading_gap: float

    @property
    def rho0(self) -> tuple[float, float]:
        return (0.0, -self.V0)


@dataclass(frozen=True)
class SystemSpec:
    """A fully validated model instance.

    Use :func:`build_system` to construct; it checks the crossing geometry
    and the coupling vanishing orders.  Immutable; derived solvers and
    sweeps share instances freely across threads.
    """

    V1: SmoothFunction
    V2: SmoothFunction
    U1: SmoothFunction
    U2: SmoothFunction
    eps1: float
    eps2: float
    h: float
    cutoff: CutoffSpec
    geometry: CrossingGeometry
    n1: int
    n2: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.V1.domain

    @property
    def m(self) -> int:
        return self.geometry.m

    @property
    def gap(self) -> SmoothFunction:
        """V1 - V2 (vanishes to order exactly m at 0)."""
        return self.V1 - self.V2

    @property
    def eps_tilde(self) -> float:
        return math.sqrt(self.eps1 * self.eps2)

    def with_params(self, h: float | None = None, eps1: float | None = None,
                    eps2: float | None = None) -> "SystemSpec":
        """Clone with new scalar parameters (geometry is unchanged)."""
        return replace(
            self,
            h=self.h if h is None else float(h),
            eps1=self.eps1 if eps1 is None else float(eps1),
            eps2=self.eps2 if eps2 is None else float(eps2),
        )


def build_system(V1: SmoothFunction, V2: SmoothFunction,
                 U1: SmoothFunction | None = None, U2: SmoothFunction | None = None,
                 eps1: float = 0.0, eps2: float = 0.0, h: float = 1e-2,
                 cutoff: CutoffSpec = DEFAULT_CUTOFF,
                 order_tol: float = 0.0) -> SystemSpec:
    """Validate the inputs and assemble a :class:`SystemSpec`.

    Rejects models where V1 - V2 is identically zero or has a zero in the
    interval other than x = 0 (checked by exact polynomial root isolation),
    where a coupling is identically zero, or where the interval/cutoff
    geometry is inconsistent.
    """
    domain = V1.domain
    if U1 is None:
        U1 = SmoothFunction((1.0,), domain)
    if U2 is None:
        U2 = SmoothFunction((1.0,), domain)
    for f in (V2, U1, U2):
        if f.domain != domain:
            raise BadInterval(f"all functions must share the domain {domain}")
    if eps1 < 0 or eps2 < 0:
        raise DegenerateModel("eps1, eps2 must be >= 0")
    if h <= 0:
        raise DegenerateModel("h must be > 0")
    cutoff.validate_inside(domain)

    gap = V1 - V2
    m = vanishing_order(gap, order_tol)
    if m is math.inf:
        raise DegenerateModel("V1 - V2 vanishes identically")
    if m == 0:
        raise DegenerateModel("V1(0) != V2(0): no crossing at x = 0")
    # other zeros of the gap: isolate roots of gap / x^m exactly
    reduced = gap.shifted_down(int(m))
    extra = reduced.real_roots_in(domain[0], domain[1])
    if extra:
        raise DegenerateModel(f"V1 - V2 has extra zeros in the interval at {extra}")

    orders = []
    for name, U in (("U1", U1), ("U2", U2)):
        n = vanishing_order(U, order_tol)
        if n is math.inf:
            raise DegenerateModel(f"{name} vanishes identically")
        orders.append(int(n))

    geometry = CrossingGeometry(
        V0=float(V1(0.0)),
        m=int(m),
        leading_gap=gap.deriv_at(int(m)),
    )
    return SystemSpec(V1=V1, V2=V2, U1=U1, U2=U2, eps1=float(eps1), eps2=float(eps2),
                      h=float(h), cutoff=cutoff, geometry=geometry,
                      n1=orders[0], n2=orders[1])


def _iota(k: int) -> int:
    """1 for odd k, 0 for even k."""
    return k % 2


@dataclass(frozen=True)
class ScaleParams:
    """All regime bookkeeping for one (eps1, eps2, h, m, n1, n2) point.

    mu_k(k)    = eps_tilde * h^(-k/(k+1)), increasing in k for h < 1.
    mu_ml(m,l) = eps_tilde * h^(-(m-l)/(m+1))            when 2l+1 < m,
                 eps_tilde * h^(-1/2) * log(1/h)^(1/2)   when 2l+1 = m,
                 eps_tilde * h^(-1/2)                    when 2l+1 > m.
    zeta       = (mu_ml(m, n_tilde) / eps_tilde)^2,
    zeta_j     = h^(-1 - nu_j) with nu_j = (m - n_j - iota(m*n_j)) / (m+1).
    """

    eps_tilde: float
    h: float
    m: int
    n1: int
    n2: int

    @property
    def n_tilde(self) -> float:
        return 0.5 * (self.n1 + self.n2)

    def mu_k(self, k: int) -> float:
        return self.eps_tilde * self.h ** (-k / (k + 1.0))

    def mu_ml(self, m: int, l: float) -> float:
        if 2 * l + 1 < m:
            return self.eps_tilde * self.h ** (-(m - l) / (m + 1.0))
        log_pow = 0.5 if 2 * l + 1 == m else 0.0
        return self.eps_tilde * self.h ** -0.5 * math.log(1.0 / self.h) ** log_pow

    @property
    def mu_m(self) -> float:
        return self.mu_k(self.m)

    @property
    def mu_mn(self) -> float:
        """mu_ml at l = n_tilde; squared, this is the off-diagonal error scale."""
        return self.mu_ml(self.m, self.n_tilde)

    @property
    def mu1_tilde(self) -> float:
        return self.mu_k(1)

    def nu(self, n_j: int) -> float:
        return (self.m - n_j - _iota(self.m * n_j)) / (self.m + 1.0)

    @property
    def nu1(self) -> float:
        return self.nu(self.n1)

    @property
    def nu2(self) -> float:
        return self.nu(self.n2)

    @property
    def zeta(self) -> float:
        return (self.mu_mn / self.eps_tilde) ** 2 if self.eps_tilde > 0 else self._zeta_raw()

    def _zeta_raw(self) -> float:
        expo = max((self.m - 2 * self.n_tilde - 1) / (self.m + 1.0), 0.0) + 1.0
        log_pow = 1.0 if 2 * self.n_tilde + 1 == self.m else 0.0
        return self.h ** -expo * math.log(1.0 / self.h) ** log_pow

    @property
    def zeta1(self) -> float:
        return self.h ** (-1.0 - self.nu1)

    @property
    def zeta2(self) -> float:
        return self.h ** (-1.0 - self.nu2)


def scale_params(spec: SystemSpec) -> ScaleParams:
    return ScaleParams(eps_tilde=spec.eps_tilde, h=spec.h, m=spec.m,
                       n1=spec.n1, n2=spec.n2)


class Regime(str, Enum):
    NONCOUPLED = "noncoupled"
    MARGINAL = "marginal"
    COUPLED = "coupled"


def classify_regime(spec: SystemSpec, theta_low: float = 0.3,
                    theta_high: float = 3.0) -> Regime:
    """Coupling-strength regime from mu_m = eps_tilde * h^(-m/(m+1)).

    The asymptotic statements only distinguish mu_m -> 0 from mu_m -> inf;
    the thresholds are working defaults for tooling, not claims.
    """
    mu = scale_params(spec).mu_m
    if mu < theta_low:
        return Regime.NONCOUPLED
    if mu > theta_high:
        return Regime.COUPLED
    return Regime.MARGINAL
