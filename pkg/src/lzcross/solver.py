"""Exact solution bases and the transfer / scattering matrices.

The system  -i h w' + H w = 0  with H = [[V1, eps1*U1], [eps2*U2, V2]] is
solved on the working interval two independent ways:

* ``series``: the iterated-kernel (Picard/Neumann) construction.  With
  u_j(x) = exp(-(i/h) * int_0^x V_j) the scalar solutions and
  K_j f(x) = (i/h) u_j(x) * int_anchor^x f/u_j the fundamental kernels,
  the basis solution anchored at an endpoint is the geometric series of
  eps1*eps2*K_1 U_1 K_2 U_2 applied to u_1 (and symmetrically for the
  second column).  The couplings are multiplied by the cutoff chi before
  solving, so the bases are exactly diagonal outside the cutoff support.

* ``ode``: direct adaptive integration in the interaction picture
  z = diag(1/u1, 1/u2) w, whose right-hand side is purely off-diagonal
  with unimodular oscillatory coefficients.  Works in every coupling
  regime and serves as the oracle for the series path.

Both store solutions in the z-representation (all stored arrays are O(1),
the fast scalar oscillation lives in exactly evaluated phase factors).

The transfer matrix T relates the two bases,
(w_{1,l}, w_{2,l}) = (w_{1,r}, w_{2,r}) T; it is extracted by solving the
2x2 linear system at several interior points, whose spread doubles as an
x-independence diagnostic.  det T = 1 up to solver error by the Wronskian
propagation law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson, solve_ivp

from .errors import (GridTooCoarse, IllConditioned, KernelMismatch,
                     RegimeViolation, SeriesDiverging, SingularT22,
                     StepUnderflow)
from .model import Regime, SystemSpec, classify_regime, scale_params
from .oscquad import omega_tilde
from .statphase import omega_tilde0

__all__ = [
    "PhaseFactors",
    "GridContext",
    "Solution",
    "Matrix2",
    "PredictedTransfer",
    "apply_K",
    "neumann_solution",
    "ode_solution",
    "wronskian",
    "wronskian_constancy",
    "basis_solutions",
    "transfer_matrix",
    "transfer_defect_from_kernels",
    "predicted_T",
    "scattering_matrix",
    "rescale_bases",
    "symmetry_deviation",
]

_EVAL_FRACTIONS = (-0.5, -0.25, 0.0, 0.25, 0.5)
_MAX_GRID_POINTS = 10_000_000


def _cumsimp(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Complex-safe cumulative Simpson from x[0]."""
    return (cumulative_simpson(y.real, x=x, initial=0.0)
            + 1j * cumulative_simpson(y.imag, x=x, initial=0.0))


@dataclass(frozen=True)
class PhaseFactors:
    """The exact scalar phase factors of a model instance.

    u_j(x)   = exp(-(i/h) * int_0^x V_j),   |u_j| = 1,
    u_pm(x)  = exp((i/2h) * int_0^x (V1 +- V2)),
    and the identities u1 = conj(u_minus)/u_plus, u2 = u_minus/u_plus hold
    pointwise for real potentials.
    """

    spec: SystemSpec

    def _A(self, which: str):
        V1, V2 = self.spec.V1, self.spec.V2
        if which == "1":
            return V1.antiderivative()
        if which == "2":
            return V2.antiderivative()
        if which == "+":
            return (V1 + V2).antiderivative()
        return (V1 - V2).antiderivative()

    def u1(self, x):
        return np.exp(-1j * self._A("1")(x) / self.spec.h)

    def u2(self, x):
        return np.exp(-1j * self._A("2")(x) / self.spec.h)

    def u_plus(self, x):
        return np.exp(0.5j * self._A("+")(x) / self.spec.h)

    def u_minus(self, x):
        return np.exp(0.5j * self._A("-")(x) / self.spec.h)


class GridContext:
    """Uniform solver grid with precomputed cutoff couplings and phases.

    Spacing starts at min(h / (10 max|V1-V2|), |I|/2000), additionally
    bounded so no cell advances any scalar phase V_j/h by more than pi/8,
    then halves ``refine`` times.  Everything the kernel operators need is
    evaluated once here: chi*U_j on the grid and the exact phase ratio
    E = u2/u1 = exp((i/h) int_0^x (V1 - V2)).
    """

    def __init__(self, spec: SystemSpec, refine: int = 0):
        self.spec = spec
        x_l, x_r = spec.interval
        length = x_r - x_l
        gap = spec.gap
        max_q = max(gap.max_abs_on(), 1e-300)
        max_v = max(spec.V1.max_abs_on(), spec.V2.max_abs_on(), max_q)
        dx = min(spec.h / (10.0 * max_q), length / 2000.0,
                 (math.pi / 8.0) * spec.h / max_v)
        dx /= 2.0 ** refine
        n = int(math.ceil(length / dx)) + 1
        if n > _MAX_GRID_POINTS:
            raise GridTooCoarse(
                f"phase resolution needs {n} points, above the cap {_MAX_GRID_POINTS}"
            )
        self.x = np.linspace(x_l, x_r, n)
        self.dx = self.x[1] - self.x[0]
        chi = spec.cutoff.chi(self.x)
        self.U1e = chi * spec.U1(self.x)
        self.U2e = chi * spec.U2(self.x)
        self.phi = gap.antiderivative()          # int_0^x (V1 - V2)
        self.E = np.exp(1j * self.phi(self.x) / spec.h)   # u2/u1 on the grid
        self._A1 = spec.V1.antiderivative()
        self._A2 = spec.V2.antiderivative()

    @property
    def n(self) -> int:
        return self.x.size

    def u(self, j: int) -> np.ndarray:
        A = self._A1 if j == 1 else self._A2
        return np.exp(-1j * A(self.x) / self.spec.h)

    def index_of(self, x0: float) -> int:
        i = int(round((x0 - self.x[0]) / self.dx))
        return min(max(i, 0), self.n - 1)

    def cum_from(self, y: np.ndarray, anchor_index: int) -> np.ndarray:
        """Cumulative integral of samples y from the anchor grid point."""
        c = _cumsimp(y, self.x)
        return c - c[anchor_index]


def apply_K(ctx: GridContext, j: int, anchor: float, f: np.ndarray) -> np.ndarray:
    """The fundamental kernel K_j f(x) = (i/h) u_j(x) int_anchor^x f/u_j.

    ``f`` is sampled on ``ctx.x``; the anchor snaps to the nearest grid
    point (the grid always contains both interval endpoints).  Satisfies
    (-i h d/dx + V_j) K_j f = f with K_j f(anchor) = 0.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    ia = ctx.index_of(anchor)
    uj = ctx.u(j)
    integrand = np.asarray(f, dtype=complex) / uj
    return (1j / ctx.spec.h) * uj * ctx.cum_from(integrand, ia)


@dataclass
class Solution:
    """One basis solution on the solver grid.

    ``values`` is the 2xN array of w; ``z`` the same solution with the
    scalar phases stripped (w = diag(u1, u2) z).  ``residual`` estimates
    max |h D_x w + H w| over the grid via fourth-order differences of z.
    ``increments`` (series path) holds the sup-norms of successive series
    terms; ``contraction`` their last measured ratio, to compare with the
    kernel-norm bound ``contraction_bound``
    eps1*eps2 * log(1/h)^d * h^(-(2m-n1-n2)/(m+1)).
    """

    grid: np.ndarray
    values: np.ndarray
    z: np.ndarray
    basis_id: tuple[int, str]
    construction: str
    residual: float
    order: int = 0
    increments: tuple[float, ...] = ()
    contraction: float = float("nan")
    contraction_bound: float = float("nan")

    def at(self, x0: float) -> np.ndarray:
        """Linear interpolation of w at x0 (grid is fine wrt all phases)."""
        out = np.empty(2, dtype=complex)
        for c in range(2):
            out[c] = np.interp(x0, self.grid, self.values[c].real) + 1j * np.interp(
                x0, self.grid, self.values[c].imag)
        return out


def _fd_residual(ctx: GridContext, z: np.ndarray) -> float:
    """max over the grid of |h D_x w + H w| estimated in the z-picture.

    In z-variables the defect is h|z' - R z| with R the off-diagonal
    interaction-picture matrix; z' comes from 4th-order central
    differences, so the estimate floors at O((dx * |V1-V2| / h)^4 |z'|).
    """
    x = ctx.x
    e1, e2, h = ctx.spec.eps1, ctx.spec.eps2, ctx.spec.h
    rhs1 = -1j / h * e1 * ctx.U1e * ctx.E * z[1]
    rhs2 = -1j / h * e2 * ctx.U2e / ctx.E * z[0]
    dz = np.empty_like(z)
    d = ctx.dx
    for c in range(2):
        zc = z[c]
        dz[c, 2:-2] = (8.0 * (zc[3:-1] - zc[1:-3]) - (zc[4:] - zc[:-4])) / (12.0 * d)
        dz[c, :2] = np.gradient(zc[:4], d)[:2]
        dz[c, -2:] = np.gradient(zc[-4:], d)[-2:]
    r = np.abs(h * dz[0] - h * rhs1) + np.abs(h * dz[1] - h * rhs2)
    return float(np.max(r))


def _series_sum(ctx: GridContext, j: int, anchor_index: int, max_order: int,
                series_tol: float) -> tuple[np.ndarray, np.ndarray, int, list[float]]:
    """Sum of the iterated double-kernel series in reduced variables.

    For j = 1 returns (g, b, order, increments) with g = (first component)/u1
    and b = (second component)/u2; symmetric for j = 2.
    """
    e1, e2, h = ctx.spec.eps1, ctx.spec.eps2, ctx.spec.h
    E = ctx.E
    S = np.ones(ctx.n, dtype=complex)
    term = S.copy()
    increments: list[float] = []
    order = 0
    for k in range(1, max_order + 1):
        if j == 1:
            t1 = (1j / h) * ctx.cum_from(ctx.U2e * term / E, anchor_index)
            term = e1 * e2 * (1j / h) * ctx.cum_from(ctx.U1e * t1 * E, anchor_index)
        else:
            t1 = (1j / h) * ctx.cum_from(ctx.U1e * term * E, anchor_index)
            term = e1 * e2 * (1j / h) * ctx.cum_from(ctx.U2e * t1 / E, anchor_index)
        sup = float(np.max(np.abs(term)))
        increments.append(sup)
        S += term
        order = k
        if len(increments) >= 3 and increments[-1] >= increments[-2] >= increments[-3] \
                and increments[-1] > series_tol:
            raise SeriesDiverging(
                f"series increments not decreasing: {increments[-3:]}"
            )
        if sup < series_tol * float(np.max(np.abs(S))):
            break
    if j == 1:
        other = -e2 * (1j / h) * ctx.cum_from(ctx.U2e * S / E, anchor_index)
    else:
        other = -e1 * (1j / h) * ctx.cum_from(ctx.U1e * S * E, anchor_index)
    return S, other, order, increments


def neumann_solution(spec: SystemSpec, j: int, side: str, max_order: int = 30,
                     series_tol: float = 1e-12, ctx: GridContext | None = None,
                     regime_guard: bool = True) -> Solution:
    """Basis solution by the iterated-kernel series, anchored at one endpoint.

    ``side`` is "l" or "r"; both kernel anchors sit at that endpoint, so
    (w_{1,side}, w_{2,side}) equals diag(u1, u2) there exactly.  The series
    converges when the coupling scale mu_{m, (n1+n2)/2} is small; in the
    coupled regime it diverges and :class:`SeriesDiverging` is raised
    (``regime_guard`` makes this an immediate :class:`RegimeViolation`).
    """
    if side not in ("l", "r"):
        raise ValueError("side must be 'l' or 'r'")
    if regime_guard and classify_regime(spec) is Regime.COUPLED:
        raise RegimeViolation("series construction is not valid in the coupled regime")
    if ctx is None:
        ctx = GridContext(spec)
    ia = 0 if side == "l" else ctx.n - 1
    g, other, order, increments = _series_sum(ctx, j, ia, max_order, series_tol)
    if j == 1:
        z = np.vstack([g, other])
    else:
        z = np.vstack([other, g])
    u1 = ctx.u(1)
    u2 = ctx.u(2)
    w = np.vstack([u1 * z[0], u2 * z[1]])
    log_pow = 1.0 if (spec.n1 + spec.n2 + 1) == spec.m else 0.0
    bound = (spec.eps1 * spec.eps2
             * math.log(1.0 / spec.h) ** log_pow
             * spec.h ** (-(2 * spec.m - spec.n1 - spec.n2) / (spec.m + 1.0)))
    contraction = (increments[-1] / increments[-2]
                   if len(increments) >= 2 and increments[-2] > 0 else float("nan"))
    return Solution(grid=ctx.x, values=w, z=z, basis_id=(j, side),
                    construction="series", residual=_fd_residual(ctx, z),
                    order=order, increments=tuple(increments),
                    contraction=contraction, contraction_bound=bound)


def ode_solution(spec: SystemSpec, j: int, side: str, rtol: float = 1e-11,
                 atol: float = 1e-13, ctx: GridContext | None = None) -> Solution:
    """Basis solution by direct adaptive integration (all regimes).

    Integrates the interaction-picture variable z = diag(1/u1, 1/u2) w,
    which obeys z' = -(i/h) [[0, eps1 chi U1 E], [eps2 chi U2 / E, 0]] z
    with E = exp((i/h) int_0^x (V1-V2)), from the chosen endpoint across
    the interval; w is reconstructed with the exact phase factors.
    """
    if side not in ("l", "r"):
        raise ValueError("side must be 'l' or 'r'")
    if ctx is None:
        ctx = GridContext(spec)
    x_l, x_r = spec.interval
    x0, x1 = (x_l, x_r) if side == "l" else (x_r, x_l)
    h = spec.h
    e1, e2 = spec.eps1, spec.eps2
    phi = ctx.phi
    cutoff = spec.cutoff
    U1, U2 = spec.U1, spec.U2

    def rhs(x, z):
        c = cutoff.chi(x)
        if c == 0.0:
            return (0.0j, 0.0j)
        ph = np.exp(1j * phi(x) / h)
        return (-1j / h * e1 * c * U1(x) * ph * z[1],
                -1j / h * e2 * c * U2(x) / ph * z[0])

    z0 = np.array([1.0 + 0j, 0.0j]) if j == 1 else np.array([0.0j, 1.0 + 0j])
    t_eval = ctx.x if side == "l" else ctx.x[::-1]
    sol = solve_ivp(rhs, (x0, x1), z0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, max_step=(x_r - x_l) / 1000.0)
    if not sol.success:
        raise StepUnderflow(f"integrator failed: {sol.message}")
    z = sol.y if side == "l" else sol.y[:, ::-1]
    z = np.ascontiguousarray(z)
    u1 = ctx.u(1)
    u2 = ctx.u(2)
    w = np.vstack([u1 * z[0], u2 * z[1]])
    return Solution(grid=ctx.x, values=w, z=z, basis_id=(j, side),
                    construction="ode", residual=_fd_residual(ctx, z))


def wronskian(w_a: Solution, w_b: Solution, x0: float) -> complex:
    """det of the 2x2 matrix of solution values at x0."""
    va = w_a.at(x0)
    vb = w_b.at(x0)
    return va[0] * vb[1] - va[1] * vb[0]


def wronskian_constancy(w_a: Solution, w_b: Solution, spec: SystemSpec) -> float:
    """Max relative drift of W(w_a, w_b)(x) * exp((i/h) int_0^x (V1+V2)).

    The Wronskian obeys W(x) = exp((i/h) int_x^y (V1+V2)) W(y), so the
    compensated product is an exact constant; its measured spread is a
    solver-quality diagnostic.
    """
    det = w_a.values[0] * w_b.values[1] - w_a.values[1] * w_b.values[0]
    Ap = (spec.V1 + spec.V2).antiderivative()
    comp = det * np.exp(1j * Ap(w_a.grid) / spec.h)
    mean = np.mean(comp)
    if abs(mean) == 0.0:
        return float(np.max(np.abs(comp)))
    return float(np.max(np.abs(comp - mean)) / abs(mean))


@dataclass
class Matrix2:
    """A 2x2 complex matrix with extraction-quality diagnostics.

    ``kernel_deviation`` (series path only) is the mismatch between T - Id
    and its direct kernel-series integral representation, an independent
    consistency check of the extraction.
    """

    entries: np.ndarray
    role: str = "transfer"
    det_deviation: float = float("nan")
    constancy_deviation: float = float("nan")
    kernel_deviation: float = float("nan")

    def __getitem__(self, idx):
        return self.entries[idx]

    def det(self) -> complex:
        e = self.entries
        return e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]

    def unitarity_deviation(self) -> float:
        e = self.entries
        return float(np.linalg.norm(e.conj().T @ e - np.eye(2), 2))


def basis_solutions(spec: SystemSpec, path: str = "ode",
                    ctx: GridContext | None = None,
                    residual_target: float = 1e-8,
                    max_refine: int = 3, **kwargs) -> dict:
    """All four basis solutions {(j, side): Solution} on a shared grid.

    When no grid is supplied, the grid is doubled (up to ``max_refine``
    times) until every residual meets ``residual_target``; with an explicit
    ``ctx`` the caller owns the resolution choice.
    """
    if path not in ("series", "ode"):
        raise ValueError("path must be 'series' or 'ode'")
    build = neumann_solution if path == "series" else ode_solution
    if ctx is not None:
        return {(j, side): build(spec, j, side, ctx=ctx, **kwargs)
                for side in ("l", "r") for j in (1, 2)}
    refine = 0
    while True:
        ctx_try = GridContext(spec, refine=refine)
        sols = {(j, side): build(spec, j, side, ctx=ctx_try, **kwargs)
                for side in ("l", "r") for j in (1, 2)}
        if max(s.residual for s in sols.values()) <= residual_target \
                or refine >= max_refine:
            return sols
        refine += 1


def transfer_matrix(spec: SystemSpec, path: str = "ode",
                    solutions: dict | None = None,
                    ctx: GridContext | None = None,
                    cond_cap: float = 1e8,
                    kernel_check_tol: float = 1e-6, **kwargs) -> Matrix2:
    """Extract T with (w_.,l) = (w_.,r) T from the four basis solutions.

    The 2x2 system is solved at five interior points x in
    {-0.5, -0.25, 0, 0.25, 0.5} * r1 (inside the cutoff plateau); entries
    are averaged, and the spread across points is stored as
    ``constancy_deviation`` (relative to max(|entry|, 1)).  Points where
    the right basis is ill-conditioned beyond ``cond_cap`` are skipped;
    if all are skipped, :class:`IllConditioned` is raised.

    For series-built bases, T - Id is additionally recomputed from the
    kernel-integral representation of the left basis at the right endpoint
    and the mismatch stored (``kernel_deviation``); a disagreement beyond
    ``kernel_check_tol`` raises :class:`KernelMismatch`.
    """
    if solutions is None:
        if ctx is None:
            solutions = basis_solutions(spec, path=path, **kwargs)
        else:
            solutions = basis_solutions(spec, path=path, ctx=ctx, **kwargs)
    grid = solutions[(1, "l")].grid
    r1 = spec.cutoff.r1
    samples = []
    for frac in _EVAL_FRACTIONS:
        x0 = frac * r1
        i = int(np.argmin(np.abs(grid - x0)))
        Ml = np.column_stack([solutions[(1, "l")].values[:, i],
                              solutions[(2, "l")].values[:, i]])
        Mr = np.column_stack([solutions[(1, "r")].values[:, i],
                              solutions[(2, "r")].values[:, i]])
        if np.linalg.cond(Mr) > cond_cap:
            continue
        samples.append(np.linalg.solve(Mr, Ml))
    if not samples:
        raise IllConditioned("right basis ill-conditioned at every evaluation point")
    T = np.mean(samples, axis=0)
    spread = max(
        float(np.max(np.abs(S - T) / np.maximum(np.abs(T), 1.0))) for S in samples
    )
    det = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
    kernel_dev = float("nan")
    if all(s.construction == "series" for s in solutions.values()):
        A = _kernel_defect(spec, grid,
                           solutions[(1, "l")].z[0], solutions[(2, "l")].z[1])
        kernel_dev = float(np.max(np.abs((T - np.eye(2)) - A)))
        if kernel_dev > kernel_check_tol:
            raise KernelMismatch(
                f"extraction vs kernel integral mismatch {kernel_dev:.3e}")
    return Matrix2(entries=T, role="transfer",
                   det_deviation=float(abs(det - 1.0)),
                   constancy_deviation=spread,
                   kernel_deviation=kernel_dev)


def _kernel_defect(spec: SystemSpec, grid: np.ndarray, g1: np.ndarray,
                   g2: np.ndarray) -> np.ndarray:
    """T - Id from the kernel-integral representation of the left bases.

    Writing the left-anchored series sums in reduced variables
    g1 = (w_{1,l})_1/u1 and g2 = (w_{2,l})_2/u2, the defect A = T - Id is

        A11 = -(e1 e2 / h^2) int U1e E   C1,   C1 = cumint_l (U2e g1 / E)
        A12 = -(i  e1  / h)  int U1e E   g2
        A21 = -(i  e2  / h)  int U2e g1 / E
        A22 = -(e1 e2 / h^2) int U2e / E C2,   C2 = cumint_l (U1e g2 E)

    with E = u2/u1 and U_je = chi U_j, all evaluated on ``grid``.
    """
    e1, e2, h = spec.eps1, spec.eps2, spec.h
    chi = spec.cutoff.chi(grid)
    U1e = chi * spec.U1(grid)
    U2e = chi * spec.U2(grid)
    E = np.exp(1j * spec.gap.antiderivative()(grid) / h)
    C1 = _cumsimp(U2e * g1 / E, grid)
    C2 = _cumsimp(U1e * g2 * E, grid)

    def integ(y):
        return complex(simpson(y.real, x=grid), simpson(y.imag, x=grid))

    A = np.empty((2, 2), dtype=complex)
    A[0, 0] = -(e1 * e2 / h**2) * integ(U1e * E * C1)
    A[0, 1] = (-1j * e1 / h) * integ(U1e * E * g2)
    A[1, 0] = (-1j * e2 / h) * integ(U2e * g1 / E)
    A[1, 1] = -(e1 * e2 / h**2) * integ(U2e / E * C2)
    return A


def transfer_defect_from_kernels(spec: SystemSpec, ctx: GridContext | None = None,
                                 max_order: int = 30, series_tol: float = 1e-12) -> np.ndarray:
    """T - Id computed directly from freshly built kernel series.

    Independent of :func:`transfer_matrix`'s point-wise extraction: the
    series sums are rebuilt here and consumed only through the endpoint
    integral representation of :func:`_kernel_defect`.
    """
    if ctx is None:
        ctx = GridContext(spec)
    g1, _, _, _ = _series_sum(ctx, 1, 0, max_order, series_tol)
    g2, _, _, _ = _series_sum(ctx, 2, 0, max_order, series_tol)
    return _kernel_defect(spec, ctx.x, g1, g2)


@dataclass(frozen=True)
class PredictedTransfer:
    """Asymptotic transfer matrix plus its own error scales.

    ``offdiag_scale`` is mu_{m,n~}^2 (relative error scale of the
    off-diagonal law); ``diag_scale_11``/``diag_scale_22`` are the refined
    envelopes min(mu_{m,n~}^2, mu1~^2 h^(-nu(n_2 resp. n_1))).
    """

    matrix: Matrix2
    offdiag_scale: float
    diag_scale_11: float
    diag_scale_22: float


def predicted_T(spec: SystemSpec, fidelity: str = "integral",
                quad_tol: float = 1e-10) -> PredictedTransfer:
    """Leading asymptotic transfer matrix in the weak-coupling regime.

        t12 = -i eps1 h^(-(m-n1)/(m+1)) * wt_{m,n1}(h; U1, V1-V2)
        t21 = -i eps2 h^(-(m-n2)/(m+1)) * wt_{m,n2}(h; U2, V2-V1)

    with diagonals 1.  fidelity "integral" evaluates the normalized
    oscillatory integrals at the given h; "closed" substitutes their
    closed-form h -> 0 limits (including the extra h^(1/(m+1)) factor when
    m and n_j are both odd).  Raises :class:`RegimeViolation` in the
    coupled regime, where the expansion has no validity.
    """
    if fidelity not in ("integral", "closed"):
        raise ValueError("fidelity must be 'integral' or 'closed'")
    if classify_regime(spec) is Regime.COUPLED:
        raise RegimeViolation("asymptotic predictor requested in the coupled regime")
    m = spec.m
    h = spec.h
    gap = spec.gap
    vals = {}
    for (jname, eps, U, Q, n) in (("t12", spec.eps1, spec.U1, gap, spec.n1),
                                  ("t21", spec.eps2, spec.U2, -1.0 * gap, spec.n2)):
        if fidelity == "integral":
            wt = omega_tilde(m, n, U, Q, h, spec.cutoff, tol=quad_tol)
        else:
            wt = omega_tilde0(m, n, U, Q)
            if (m % 2 == 1) and (n % 2 == 1):
                wt = wt * h ** (1.0 / (m + 1))
        vals[jname] = -1j * eps * h ** (-(m - n) / (m + 1.0)) * wt
    T = np.array([[1.0 + 0j, vals["t12"]], [vals["t21"], 1.0 + 0j]])
    sc = scale_params(spec)
    mu_sq = sc.mu_mn ** 2
    mu1_sq = sc.mu1_tilde ** 2
    return PredictedTransfer(
        matrix=Matrix2(entries=T, role="predicted"),
        offdiag_scale=mu_sq,
        diag_scale_11=min(mu_sq, mu1_sq * h ** (-sc.nu2)),
        diag_scale_22=min(mu_sq, mu1_sq * h ** (-sc.nu1)),
    )


def hermitian_convention(spec: SystemSpec) -> str | None:
    """Which Hermitian-equivalent scattering convention the model admits.

    "hermite1" for equal strengths with U1 = U2 (conjugate real couplings),
    "hermite2" for equal strengths with U1 = -U2, None otherwise (e.g.
    asymmetric strengths, where only the rescaled transfer matrix is
    asymptotically unitary).
    """
    if spec.eps1 != spec.eps2:
        return None
    u1 = np.asarray(spec.U1.coeffs)
    u2 = np.asarray(spec.U2.coeffs)
    n = max(u1.size, u2.size)
    u1 = np.pad(u1, (0, n - u1.size))
    u2 = np.pad(u2, (0, n - u2.size))
    if np.array_equal(u1, u2):
        return "hermite1"
    if np.array_equal(u1, -u2):
        return "hermite2"
    return None


def scattering_matrix(T: Matrix2, convention: str = "hermite1",
                      det_tol: float = 1e-6) -> Matrix2:
    """Scattering matrix from the transfer matrix.

    "hermite1" (couplings conjugate to each other, equal eps): both flows
    run left-to-right and S = T.  "hermite2" (couplings anti-conjugate):
    the second flow is reversed and

        S = (1/t22) [[1, t12], [-t21, 1]].

    Requires det T = 1 within ``det_tol``; "hermite2" needs |t22| bounded
    away from zero.
    """
    if convention not in ("hermite1", "hermite2"):
        raise ValueError("convention must be 'hermite1' or 'hermite2'")
    if abs(T.det() - 1.0) > det_tol:
        raise ValueError(f"det T = {T.det():.6g} is not 1 within {det_tol}")
    if convention == "hermite1":
        return Matrix2(entries=T.entries.copy(), role="scattering",
                       det_deviation=T.det_deviation,
                       constancy_deviation=T.constancy_deviation)
    t = T.entries
    if abs(t[1, 1]) < 1e-12:
        raise SingularT22("|t22| < 1e-12")
    S = np.array([[1.0 + 0j, t[0, 1]], [-t[1, 0], 1.0 + 0j]]) / t[1, 1]
    return Matrix2(entries=S, role="scattering",
                   det_deviation=T.det_deviation,
                   constancy_deviation=T.constancy_deviation)


def rescale_bases(T: Matrix2, eps1: float, eps2: float) -> Matrix2:
    """Conjugate T by diag((eps2/eps1)^(1/4), (eps1/eps2)^(1/4)).

    Corresponds to rescaling the four basis solutions by the fourth roots
    of the coupling ratio; diagonals are unchanged, t12 picks up
    sqrt(eps2/eps1) and t21 the inverse, so t12*t21 is invariant.  Restores
    asymptotic unitarity for eps1 != eps2 with conjugate couplings.
    """
    if eps1 <= 0 or eps2 <= 0:
        raise ValueError("eps1, eps2 must be > 0")
    r = (eps2 / eps1) ** 0.25
    D = np.array([[r, 0.0], [0.0, 1.0 / r]])
    E = D @ T.entries @ np.linalg.inv(D)
    return Matrix2(entries=E, role=T.role, det_deviation=T.det_deviation,
                   constancy_deviation=T.constancy_deviation)


def symmetry_deviation(spec: SystemSpec, solutions: dict, convention: str = "hermite1") -> float:
    """Pointwise symmetry defect between the two columns of one basis.

    For conjugate couplings (U1 = conj U2, eps1 = eps2) the exact solutions
    satisfy  u_plus w_{2,side} = [[0, -1], [1, 0]] conj(u_plus w_{1,side});
    for anti-conjugate couplings the matrix is [[0, 1], [1, 0]].  Returns
    the max pointwise mismatch over both sides, normalized by the solution
    sup-norm.
    """
    Ap = (spec.V1 + spec.V2).antiderivative()
    J = np.array([[0.0, -1.0], [1.0, 0.0]]) if convention == "hermite1" \
        else np.array([[0.0, 1.0], [1.0, 0.0]])
    worst = 0.0
    for side in ("l", "r"):
        w1 = solutions[(1, side)]
        w2 = solutions[(2, side)]
        up = np.exp(0.5j * Ap(w1.grid) / spec.h)
        lhs = up * w2.values
        rhs = J @ np.conj(up * w1.values)
        num = float(np.max(np.abs(lhs - rhs)))
        den = max(float(np.max(np.abs(lhs))), 1e-300)
        worst = max(worst, num / den)
    return worst
