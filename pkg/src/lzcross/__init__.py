"""Numerics for 2x2 semiclassical avoided crossings.

Builds exact solution bases of the first-order system
-i h w' + [[V1, eps1 U1], [eps2 U2, V2]] w = 0 near a crossing of V1 and V2
of arbitrary finite contact order, extracts the transfer and local
scattering matrices, and checks them against degenerate stationary-phase
asymptotics with independent quadrature and ODE oracles.
"""

from .model import (CrossingGeometry, CutoffSpec, Regime, ScaleParams,
                    SmoothFunction, SystemSpec, build_system, classify_regime,
                    scale_params, vanishing_order)
from .oscquad import OscIntegrand, QuadResult, brute_force, integrate_adaptive, omega_tilde
from .presets import PRESETS, get_preset, make_spec, preset_names
from .solver import (GridContext, Matrix2, PhaseFactors, PredictedTransfer,
                     Solution, apply_K, basis_solutions, hermitian_convention,
                     neumann_solution, ode_solution, predicted_T,
                     rescale_bases, scattering_matrix, symmetry_deviation,
                     transfer_matrix, wronskian, wronskian_constancy)
from .statphase import (DspExpansion, PhaseNormalForm, a_phi_derivatives,
                        dsp_expansion, eta, eta_m, omega_m, omega_tilde0,
                        phase_normal_form)

__version__ = "0.1.0"
