"""Command-line front end.

Subcommands:

* ``solve``   - one parameter point: transfer matrix, scattering matrix,
                predictions and deviations.
* ``sweep``   - run a SweepConfig over an h-grid, write the CSV and the
                report figures.
* ``verify``  - run the invariant suite; exit 0 iff everything passes.
* ``predict`` - asymptotics only (no solve).
* ``dsp``     - stationary-phase expansion vs quadrature for a user phase
                and amplitude.

Configuration can come from a JSON document (--config) with inline flags
overriding file values.  Every run is deterministic; there is no seed.
Errors print a single machine-readable line ``error: <Type>: <message>``
on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CrossingError, ParseError, ValidationError
from .harness import (FixedEps, FixedMu, PowerLaw, SweepConfig, run_sweep,
                      verify_suite, write_outputs)
from .model import SmoothFunction, classify_regime, scale_params
from .oscquad import OscIntegrand, integrate_adaptive
from .presets import get_preset, preset_names
from .solver import (hermitian_convention, predicted_T, rescale_bases,
                     scattering_matrix, transfer_matrix)
from .statphase import dsp_expansion, omega_m, omega_tilde0

try:  # package metadata when installed; source default otherwise
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("lzcross")
except Exception:  # pragma: no cover
    __version__ = "0.1.0"

__all__ = ["CliConfig", "parse_config", "emit_config", "main"]


_DEFAULTS = {
    "preset": "tangent-m2",
    "h": None,
    "eps": None,
    "eps1": None,
    "eps2": None,
    "out": None,
    "path": "ode",
    "fidelity": "integral",
    "tol": 1e-10,
    "threads": 1,
    "plots": True,
    "h_grid": None,
    "eps_rule": None,
}


@dataclass(frozen=True)
class CliConfig:
    preset: str = "tangent-m2"
    h: float | None = None
    eps: float | None = None
    eps1: float | None = None
    eps2: float | None = None
    out: str | None = None
    path: str = "ode"
    fidelity: str = "integral"
    tol: float = 1e-10
    threads: int = 1
    plots: bool = True
    h_grid: tuple[float, float, int] | None = None
    eps_rule: dict | None = None

    def eps_pair(self) -> tuple[float | None, float | None]:
        if self.eps is not None:
            return self.eps, self.eps
        return self.eps1, self.eps2


def _validate(cfg: CliConfig) -> CliConfig:
    if cfg.preset not in preset_names():
        raise ValidationError("preset", f"unknown preset {cfg.preset!r}; "
                              f"available: {', '.join(preset_names())}")
    if cfg.h is not None and cfg.h <= 0:
        raise ValidationError("h", "must be > 0")
    for name in ("eps", "eps1", "eps2"):
        v = getattr(cfg, name)
        if v is not None and v < 0:
            raise ValidationError(name, "must be >= 0")
    if cfg.eps is not None and (cfg.eps1 is not None or cfg.eps2 is not None):
        raise ValidationError("eps", "give either eps or eps1/eps2, not both")
    if cfg.path not in ("ode", "series", "both"):
        raise ValidationError("path", "must be one of ode, series, both")
    if cfg.fidelity not in ("integral", "closed"):
        raise ValidationError("fidelity", "must be integral or closed")
    if cfg.tol <= 0:
        raise ValidationError("tol", "must be > 0")
    if cfg.threads < 1:
        raise ValidationError("threads", "must be >= 1")
    if cfg.h_grid is not None:
        if len(cfg.h_grid) != 3:
            raise ValidationError("h_grid", "must be [start, stop, points]")
        start, stop, pts = cfg.h_grid
        if not (0 < stop <= start < 1) or int(pts) < 1:
            raise ValidationError("h_grid", "need 0 < stop <= start < 1 and points >= 1")
    if cfg.eps_rule is not None:
        kind = cfg.eps_rule.get("kind")
        if kind not in ("fixed", "powerlaw", "fixedmu"):
            raise ValidationError("eps_rule", "kind must be fixed, powerlaw or fixedmu")
    return cfg


def parse_config(text: str) -> CliConfig:
    """Parse and validate a JSON config document.

    Unknown keys are rejected with a closest-match suggestion; structural
    JSON errors carry line/column.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}", line=exc.lineno, column=exc.colno)
    if not isinstance(raw, dict):
        raise ParseError("config document must be a JSON object")
    known = set(_DEFAULTS)
    for key in raw:
        if key not in known:
            hint = difflib.get_close_matches(key, known, n=1, cutoff=0.5)
            suffix = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ValidationError(key, f"unknown key{suffix}")
    merged = dict(_DEFAULTS)
    merged.update(raw)
    if merged["h_grid"] is not None:
        hg = merged["h_grid"]
        merged["h_grid"] = (float(hg[0]), float(hg[1]), int(hg[2]))
    try:
        cfg = CliConfig(**merged)
    except TypeError as exc:
        raise ValidationError("config", str(exc))
    return _validate(cfg)


def emit_config(cfg: CliConfig) -> str:
    """Canonical JSON for a config; parse(emit(cfg)) == cfg."""
    d = dataclasses.asdict(cfg)
    if d["h_grid"] is not None:
        d["h_grid"] = list(d["h_grid"])
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _merge_flags(cfg: CliConfig, args: argparse.Namespace) -> CliConfig:
    updates = {}
    for name in ("preset", "h", "eps", "eps1", "eps2", "out", "path",
                 "fidelity", "tol", "threads"):
        v = getattr(args, name, None)
        if v is not None:
            updates[name] = v
    if getattr(args, "no_plots", False):
        updates["plots"] = False
    if getattr(args, "h_grid", None) is not None:
        g = args.h_grid
        updates["h_grid"] = (float(g[0]), float(g[1]), int(g[2]))
    for rule, key in (("fixed_mu", "fixedmu"), ("eps_power", "powerlaw")):
        if getattr(args, rule, None) is not None:
            v = getattr(args, rule)
            if key == "fixedmu":
                updates["eps_rule"] = {"kind": "fixedmu", "mu": float(v)}
            else:
                updates["eps_rule"] = {"kind": "powerlaw", "coef": float(v[0]),
                                       "exponent": float(v[1])}
    return _validate(dataclasses.replace(cfg, **updates))


def _load_config(args: argparse.Namespace) -> CliConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = CliConfig()
    return _merge_flags(cfg, args)


def _fmt_c(z: complex) -> str:
    return f"{z.real:+.9e}{z.imag:+.9e}j"


def _fmt_matrix(M: np.ndarray, indent: str = "    ") -> str:
    rows = [" ".join(_fmt_c(complex(M[i, j])) for j in range(2)) for i in range(2)]
    return "\n".join(indent + r for r in rows)


def _spec_from_cfg(cfg: CliConfig):
    e1, e2 = cfg.eps_pair()
    return get_preset(cfg.preset).make(h=cfg.h, eps1=e1, eps2=e2)


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    if args.show_config:
        sys.stdout.write(emit_config(cfg))
        return 0
    spec = _spec_from_cfg(cfg)
    sc = scale_params(spec)
    regime = classify_regime(spec)
    print(f"preset {cfg.preset}: m={spec.m} n1={spec.n1} n2={spec.n2} "
          f"interval={spec.interval} cutoff=({spec.cutoff.r1}, {spec.cutoff.r2})")
    print(f"h={spec.h:g} eps1={spec.eps1:g} eps2={spec.eps2:g} "
          f"mu_m={sc.mu_m:.6g} regime={regime.value}")
    paths = ("ode", "series") if cfg.path == "both" else (cfg.path,)
    T = None
    for path in paths:
        T = transfer_matrix(spec, path=path)
        print(f"transfer matrix ({path}):")
        print(_fmt_matrix(T.entries))
        print(f"  det deviation        {T.det_deviation:.3e}")
        print(f"  constancy deviation  {T.constancy_deviation:.3e}")
        conv = hermitian_convention(spec)
        if conv is not None:
            S = scattering_matrix(T, conv)
            print(f"  unitarity deviation  {S.unitarity_deviation():.3e} ({conv})")
        else:
            S = rescale_bases(T, spec.eps1, spec.eps2)
            print(f"  unitarity deviation  {S.unitarity_deviation():.3e} (rescaled)")
    if regime.value != "coupled":
        pred = predicted_T(spec, fidelity=cfg.fidelity, quad_tol=cfg.tol)
        p12 = complex(pred.matrix[0, 1])
        p21 = complex(pred.matrix[1, 0])
        print(f"predicted ({cfg.fidelity} fidelity):")
        print(f"  t12 {_fmt_c(p12)}   t21 {_fmt_c(p21)}")
        print(f"  off-diagonal error scale {pred.offdiag_scale:.3e}")
        if T is not None:
            d12a = abs(complex(T.entries[0, 1]) - p12)
            d21a = abs(complex(T.entries[1, 0]) - p21)
            print(f"  measured vs predicted abs dev: t12 {d12a:.3e}  t21 {d21a:.3e}")
            # relative deviations are meaningless against a ~zero prediction
            if min(abs(p12), abs(p21)) > 1e-14:
                print(f"  measured vs predicted rel dev: t12 {d12a / abs(p12):.3e}"
                      f"  t21 {d21a / abs(p21):.3e}")
    else:
        print("predicted: skipped (coupled regime)")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if cfg.h_grid is None:
        raise ConfigError("sweep needs an h_grid (--h-grid start stop points)")
    rule_spec = cfg.eps_rule or {}
    kind = rule_spec.get("kind")
    if kind == "fixedmu":
        rule = FixedMu(mu=float(rule_spec["mu"]))
    elif kind == "powerlaw":
        rule = PowerLaw(coef=float(rule_spec["coef"]),
                        exponent=float(rule_spec["exponent"]))
    else:
        e1, e2 = cfg.eps_pair()
        if e1 is None or e2 is None:
            raise ConfigError("sweep needs --eps/--eps1/--eps2, --fixed-mu, "
                              "or --eps-power")
        rule = FixedEps(eps1=float(e1), eps2=float(e2))
    paths = ("ode", "series") if cfg.path == "both" else (cfg.path,)
    sweep = SweepConfig(preset=cfg.preset, h_grid=cfg.h_grid, eps_rule=rule,
                        paths=paths, fidelity=cfg.fidelity, out=cfg.out,
                        plots=cfg.plots, threads=cfg.threads, quad_tol=cfg.tol)
    note = sweep.noncoupled_tail_note()
    if note:
        print(f"note: {note}")
    records = run_sweep(sweep)
    failures = [r for r in records if r.error]
    written = write_outputs(records, sweep)
    print(f"{len(records)} records ({len(failures)} failed)")
    for p in written:
        print(f"wrote {p}")
    if not written:
        from .harness import records_to_csv

        sys.stdout.write(records_to_csv(records))
    return 0


def _cmd_verify(args) -> int:
    presets = None
    if args.preset and args.preset != "all":
        presets = [args.preset]
    report = verify_suite(presets=presets, tol_scale=args.tol_scale,
                          quick=args.quick)
    print(report.format())
    return 0 if report.passed else 1


def _cmd_predict(args) -> int:
    cfg = _load_config(args)
    spec = _spec_from_cfg(cfg)
    sc = scale_params(spec)
    print(f"preset {cfg.preset}: m={spec.m} n1={spec.n1} n2={spec.n2} "
          f"h={spec.h:g} mu_m={sc.mu_m:.6g}")
    w12 = omega_tilde0(spec.m, spec.n1, spec.U1, spec.gap)
    w21 = omega_tilde0(spec.m, spec.n2, spec.U2, -1.0 * spec.gap)
    print(f"leading constants: t12 side {_fmt_c(w12)}   t21 side {_fmt_c(w21)}")
    if spec.m >= 2 and spec.n1 == 0 and spec.n2 == 0:
        print(f"constant-coupling leading constant {_fmt_c(omega_m(spec.V1, spec.V2))}")
    pred = predicted_T(spec, fidelity=cfg.fidelity, quad_tol=cfg.tol)
    print(f"predicted t12 {_fmt_c(complex(pred.matrix[0, 1]))}   "
          f"t21 {_fmt_c(complex(pred.matrix[1, 0]))}  ({cfg.fidelity} fidelity)")
    print(f"error scales: offdiag {pred.offdiag_scale:.3e} "
          f"diag ({pred.diag_scale_11:.3e}, {pred.diag_scale_22:.3e})")
    return 0


def _cmd_dsp(args) -> int:
    phase = SmoothFunction(tuple(args.phase))
    amp = SmoothFunction(tuple(args.amp))
    from .model import CutoffSpec

    cut = CutoffSpec(args.r1, args.r2)
    value, exp = dsp_expansion(amp, phase, args.h, args.terms)
    g = OscIntegrand(lambda x: cut.chi(x) * amp(x), phase, args.h)
    quad = integrate_adaptive(g, tol=args.tol)
    print(f"stationary point order k={exp.k}, {args.terms} term(s), "
          f"remainder exponent {exp.remainder_exponent}")
    print(f"expansion  {_fmt_c(value)}")
    print(f"quadrature {_fmt_c(quad.value)}  (error estimate {quad.error:.3e})")
    diff = abs(quad.value - value)
    print(f"|difference| {diff:.6e}  expected scale h^{float(exp.remainder_exponent):.4f}"
          f" = {args.h ** float(exp.remainder_exponent):.3e}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lzcross",
        description="Transfer and scattering matrices of 2x2 avoided crossings; "
                    "deterministic (seedless) by construction.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--preset", choices=preset_names(), default=None,
                       help="model preset")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--h", type=float, default=None, help="semiclassical parameter")
        p.add_argument("--eps", type=float, default=None, help="coupling eps1 = eps2")
        p.add_argument("--eps1", type=float, default=None, help="first coupling strength")
        p.add_argument("--eps2", type=float, default=None, help="second coupling strength")
        p.add_argument("--path", choices=["ode", "series", "both"], default=None,
                       help="solution construction path")
        p.add_argument("--fidelity", choices=["integral", "closed"], default=None,
                       help="predictor fidelity")
        p.add_argument("--tol", type=float, default=None, help="quadrature tolerance")
        p.add_argument("--threads", type=int, default=None, help="sweep worker threads")
        if with_out:
            p.add_argument("--out", default=None, help="output CSV path")

    ps = sub.add_parser("solve", help="solve one parameter point")
    common(ps)
    ps.add_argument("--show-config", action="store_true",
                    help="print the effective config as JSON and exit")
    ps.set_defaults(func=_cmd_solve)

    pw = sub.add_parser("sweep", help="run an h-grid sweep, write CSV and figures")
    common(pw)
    pw.add_argument("--h-grid", nargs=3, metavar=("START", "STOP", "POINTS"),
                    default=None, help="geometric h grid, decreasing")
    pw.add_argument("--fixed-mu", type=float, default=None,
                    help="hold mu_m at this value along the sweep")
    pw.add_argument("--eps-power", nargs=2, metavar=("COEF", "EXPONENT"),
                    type=float, default=None, help="eps_tilde = COEF * h**EXPONENT")
    pw.add_argument("--no-plots", action="store_true", help="skip report figures")
    pw.set_defaults(func=_cmd_sweep)

    pv = sub.add_parser("verify", help="run the invariant suite")
    pv.add_argument("--preset", default="all",
                    choices=preset_names() + ["all"], help="preset(s) to verify")
    pv.add_argument("--tol-scale", type=float, default=1.0,
                    help="scale all thresholds (e.g. 0.01 tightens 100x)")
    pv.add_argument("--quick", action="store_true", help="trim slow checks")
    pv.set_defaults(func=_cmd_verify)

    pp = sub.add_parser("predict", help="asymptotics only, no solve")
    common(pp, with_out=False)
    pp.set_defaults(func=_cmd_predict)

    pd = sub.add_parser("dsp", help="stationary-phase expansion vs quadrature")
    pd.add_argument("--phase", nargs="+", type=float, required=True,
                    help="phase polynomial coefficients, ascending")
    pd.add_argument("--amp", nargs="+", type=float, default=[1.0],
                    help="amplitude polynomial coefficients, ascending")
    pd.add_argument("--h", type=float, required=True)
    pd.add_argument("--terms", type=int, default=1, help="number of expansion terms")
    pd.add_argument("--tol", type=float, default=1e-10)
    pd.add_argument("--r1", type=float, default=0.3, help="cutoff plateau radius")
    pd.add_argument("--r2", type=float, default=0.7, help="cutoff support radius")
    pd.set_defaults(func=_cmd_dsp)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CrossingError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2 if isinstance(exc, (ConfigError, ParseError, ValidationError)) else 1
    except OSError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
