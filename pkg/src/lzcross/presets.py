"""Named model presets used by the CLI, the sweep harness and the tests.

Each preset fixes the polynomial data (potentials, couplings, interval,
cutoff) and sensible default parameters; h and the coupling strengths stay
free so sweeps can move them.  Coupling defaults keep the model in the
weak-coupling regime at the default h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .model import CutoffSpec, SmoothFunction, SystemSpec, build_system

__all__ = ["Preset", "PRESETS", "get_preset", "make_spec", "preset_names"]


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    builder: Callable[[float, float, float], SystemSpec]
    default_h: float
    default_mu: float          # mu_m used to derive default couplings
    eps_ratio: float = 1.0     # eps1 / eps2
    m: int = 1

    def default_eps_tilde(self, h: float) -> float:
        return self.default_mu * h ** (self.m / (self.m + 1.0))

    def make(self, h: float | None = None, eps1: float | None = None,
             eps2: float | None = None) -> SystemSpec:
        h = self.default_h if h is None else float(h)
        if eps1 is None and eps2 is None:
            et = self.default_eps_tilde(h)
            eps2 = et / math.sqrt(self.eps_ratio)
            eps1 = et * math.sqrt(self.eps_ratio)
        elif eps1 is None:
            eps1 = self.eps_ratio * eps2
        elif eps2 is None:
            eps2 = eps1 / self.eps_ratio
        return self.builder(h, float(eps1), float(eps2))


def _poly(coeffs, domain=(-1.0, 1.0)):
    return SmoothFunction(tuple(coeffs), domain)


def _linear(h, e1, e2):
    # transversal crossing: V1 = x, V2 = -x
    return build_system(_poly((0.0, 1.0)), _poly((0.0, -1.0)),
                        _poly((1.0,)), _poly((1.0,)), e1, e2, h)


def _tangent_m2(h, e1, e2):
    # order-2 contact: V1 = x^2/2, V2 = -x^2/2
    return build_system(_poly((0.0, 0.0, 0.5)), _poly((0.0, 0.0, -0.5)),
                        _poly((1.0,)), _poly((1.0,)), e1, e2, h)


def _tangent_m3(h, e1, e2):
    # order-3 contact: V1 = x^3/2, V2 = -x^3/2
    return build_system(_poly((0.0, 0.0, 0.0, 0.5)), _poly((0.0, 0.0, 0.0, -0.5)),
                        _poly((1.0,)), _poly((1.0,)), e1, e2, h)


def _vanishing_coupling(h, e1, e2):
    # order-2 contact with couplings U1 = U2 = x vanishing to first order
    return build_system(_poly((0.0, 0.0, 0.5)), _poly((0.0, 0.0, -0.5)),
                        _poly((0.0, 1.0)), _poly((0.0, 1.0)), e1, e2, h)


def _nonhermitian(h, e1, e2):
    # same geometry as tangent-m2 but asymmetric coupling strengths
    return build_system(_poly((0.0, 0.0, 0.5)), _poly((0.0, 0.0, -0.5)),
                        _poly((1.0,)), _poly((1.0,)), e1, e2, h)


def _tangent_m2_antisym(h, e1, e2):
    # anti-conjugate couplings U1 = -U2 = 1: flow-reversed scattering case
    return build_system(_poly((0.0, 0.0, 0.5)), _poly((0.0, 0.0, -0.5)),
                        _poly((1.0,)), _poly((-1.0,)), e1, e2, h)


def _lz_wide(h, e1, e2):
    # transversal crossing on a wide interval with the coupling switched off
    # near the ends: the classical transition-probability configuration.
    dom = (-8.0, 8.0)
    return build_system(_poly((0.0, 1.0), dom), _poly((0.0, -1.0), dom),
                        _poly((1.0,), dom), _poly((1.0,), dom), e1, e2, h,
                        cutoff=CutoffSpec(5.0, 7.0))


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("lz-linear", "transversal crossing V = +-x, constant couplings",
               _linear, default_h=1e-2, default_mu=0.05, m=1),
        Preset("tangent-m2", "order-2 tangential crossing V = +-x^2/2",
               _tangent_m2, default_h=1e-3, default_mu=0.05, m=2),
        Preset("tangent-m3", "order-3 tangential crossing V = +-x^3/2",
               _tangent_m3, default_h=1e-3, default_mu=0.05, m=3),
        Preset("vanishing-coupling", "order-2 crossing with U1 = U2 = x",
               _vanishing_coupling, default_h=1e-3, default_mu=0.05, m=2),
        Preset("nonhermitian", "order-2 crossing with eps1 = 2 eps2",
               _nonhermitian, default_h=1e-3, default_mu=3e-3, eps_ratio=2.0, m=2),
        Preset("tangent-m2-antisym", "order-2 crossing with U1 = -U2 = 1",
               _tangent_m2_antisym, default_h=1e-3, default_mu=0.05, m=2),
        Preset("lz-wide", "wide-interval transversal crossing for transition probabilities",
               _lz_wide, default_h=1e-2, default_mu=0.3, m=1),
    )
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def make_spec(name: str, h: float | None = None, eps1: float | None = None,
              eps2: float | None = None) -> SystemSpec:
    return get_preset(name).make(h=h, eps1=eps1, eps2=eps2)
