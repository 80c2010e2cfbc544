import csv
import math

import pytest

from lzcross.errors import ConfigError, InsufficientData
from lzcross.harness import (CSV_COLUMNS, FixedEps, FixedMu, PowerLaw,
                             SweepConfig, fit_convergence, records_to_csv,
                             run_sweep, write_outputs)


def m2_sweep(**kw):
    base = dict(preset="tangent-m2", h_grid=(1e-2, 1e-3, 2),
                eps_rule=FixedMu(0.05), paths=("ode",))
    base.update(kw)
    return SweepConfig(**base)


# --- configuration validation ---------------------------------------------------

def test_config_rejects_empty_grid():
    with pytest.raises(ConfigError):
        SweepConfig(preset="tangent-m2", h_grid=(1e-2, 1e-3, 0),
                    eps_rule=FixedMu(0.05))


def test_config_rejects_increasing_grid():
    with pytest.raises(ConfigError):
        SweepConfig(preset="tangent-m2", h_grid=(1e-3, 1e-2, 2),
                    eps_rule=FixedMu(0.05))


def test_config_rejects_unknown_preset_and_path():
    with pytest.raises(ConfigError):
        SweepConfig(preset="nope", h_grid=(1e-2, 1e-3, 2), eps_rule=FixedMu(0.05))
    with pytest.raises(ConfigError):
        m2_sweep(paths=("walk",))


def test_powerlaw_tail_note():
    cfg = m2_sweep(eps_rule=PowerLaw(coef=1.0, exponent=0.8))
    assert "non-coupled" in cfg.noncoupled_tail_note()
    cfg2 = m2_sweep(eps_rule=PowerLaw(coef=1.0, exponent=0.5))
    assert cfg2.noncoupled_tail_note() is None


def test_eps_rules():
    assert FixedEps(1e-3, 2e-3).eps_pair(0.1, 1.0, 2) == (1e-3, 2e-3)
    e1, e2 = FixedMu(0.05).eps_pair(1e-3, 1.0, 2)
    assert e1 == e2 == pytest.approx(0.05 * 1e-3 ** (2 / 3))
    e1, e2 = PowerLaw(2.0, 0.5).eps_pair(1e-4, 4.0, 2)
    assert math.sqrt(e1 * e2) == pytest.approx(2.0 * 1e-2)
    assert e1 / e2 == pytest.approx(4.0)


# --- running sweeps ----------------------------------------------------------------

def test_single_point_sweep_record():
    cfg = m2_sweep(h_grid=(1e-3, 1e-3, 1))
    records = run_sweep(cfg)
    assert len(records) == 1
    r = records[0]
    assert r.error is None
    assert r.det_dev <= 1e-8
    assert r.regime == "noncoupled"
    assert r.mu_m == pytest.approx(0.05, rel=1e-12)
    # fixed mu: |t12| tracks mu * |transition constant|
    assert abs(complex(r.t[0, 1])) == pytest.approx(0.05 * 2.2307, rel=0.02)


def test_sweep_failure_tagged_not_raised():
    # series path in a strongly coupled regime: recorded, not raised
    cfg = SweepConfig(preset="tangent-m2", h_grid=(1e-3, 1e-3, 1),
                      eps_rule=FixedEps(0.5, 0.5), paths=("series",))
    records = run_sweep(cfg)
    assert len(records) == 1
    assert records[0].error == "RegimeViolation"
    assert records[0].t is None


def test_sweep_sorted_and_complete():
    cfg = m2_sweep(paths=("ode", "series"))
    records = run_sweep(cfg)
    assert len(records) == 4
    keys = [r.sort_key() for r in records]
    assert keys == sorted(keys)


# --- CSV ------------------------------------------------------------------------

def test_csv_schema_and_roundtrip(tmp_path):
    cfg = m2_sweep(h_grid=(1e-3, 1e-3, 1), out=str(tmp_path / "sweep.csv"),
                   plots=False)
    records = run_sweep(cfg)
    paths = write_outputs(records, cfg)
    assert paths == [str(tmp_path / "sweep.csv")]
    with open(paths[0]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2
    row = dict(zip(rows[0], rows[1]))
    assert float(row["h"]) == 1e-3
    assert row["regime"] == "noncoupled"
    assert float(row["det_dev"]) <= 1e-8
    assert float(row["im_t12"]) == pytest.approx(-0.05 * 2.2307, rel=0.02)


def test_csv_deterministic_modulo_wall_ms():
    cfg = m2_sweep(h_grid=(1e-2, 1e-2, 1))
    a = records_to_csv(run_sweep(cfg))
    b = records_to_csv(run_sweep(cfg))

    def strip_wall(text):
        return "\n".join(",".join(line.split(",")[:-1]) for line in text.splitlines())

    assert strip_wall(a) == strip_wall(b)


def test_threaded_sweep_matches_serial():
    cfg1 = m2_sweep(threads=1)
    cfg2 = m2_sweep(threads=3)

    def strip_wall(text):
        return "\n".join(",".join(line.split(",")[:-1]) for line in text.splitlines())

    assert strip_wall(records_to_csv(run_sweep(cfg1))) == \
        strip_wall(records_to_csv(run_sweep(cfg2)))


def test_figures_written(tmp_path):
    cfg = m2_sweep(out=str(tmp_path / "s.csv"), plots=True)
    paths = write_outputs(run_sweep(cfg), cfg)
    assert str(tmp_path / "s.csv") in paths
    assert str(tmp_path / "s_offdiag.png") in paths
    assert str(tmp_path / "s_diagnostics.png") in paths
    for p in paths:
        assert (tmp_path / p.split("/")[-1]).stat().st_size > 0


# --- convergence fits ----------------------------------------------------------------

def test_fit_exact_linear():
    hs = [10 ** -(k / 2) for k in range(2, 8)]
    fit = fit_convergence([(h, h) for h in hs])
    assert fit.slope == pytest.approx(1.0, abs=1e-12)


def test_fit_synthetic_cube_root():
    hs = [1e-1, 1e-2, 1e-3, 1e-4]
    fit = fit_convergence([(h, 3 * h ** (1 / 3)) for h in hs])
    assert fit.slope == pytest.approx(1 / 3, abs=1e-3)
    assert fit.stderr < 1e-6


def test_fit_rejects_insufficient_or_invalid():
    with pytest.raises(InsufficientData):
        fit_convergence([(1e-1, 1.0), (1e-2, 0.5)])
    with pytest.raises(InsufficientData):
        fit_convergence([(1e-1, 1.0), (1e-2, 0.5), (1e-3, 0.0)])


# --- the invariant suite -----------------------------------------------------------

@pytest.fixture(scope="module")
def default_verify_report():
    from lzcross.harness import verify_suite

    return verify_suite()


def test_verify_suite_default_passes(default_verify_report):
    rep = default_verify_report
    failed = [c.line() for c in rep.checks if not (c.passed or c.skipped)]
    assert rep.passed, "\n".join(failed)
    assert len(rep.checks) > 25


def test_verify_suite_covers_every_module(default_verify_report):
    prefixes = {c.name.split(".")[0] for c in default_verify_report.checks}
    assert {"model", "oscquad", "statphase", "solver", "harness"} <= prefixes


def test_verify_suite_coupled_gating_noted(default_verify_report):
    gating = [c for c in default_verify_report.checks
              if c.name == "solver.coupled-gating"]
    assert len(gating) == 1
    assert gating[0].passed
    assert "RegimeViolation" in gating[0].note


def test_verify_suite_tightened_enumerates_failures():
    from lzcross.harness import verify_suite

    rep = verify_suite(presets=["tangent-m2"], tol_scale=1e-4, quick=True)
    assert not rep.passed
    failed = [c for c in rep.checks if not (c.passed or c.skipped)]
    assert failed
    # a crashed check reports nan for both fields; none may crash
    crashed = [c for c in rep.checks
               if not c.skipped and math.isnan(c.measured) and math.isnan(c.threshold)]
    assert not crashed, [c.line() for c in crashed]
    text = rep.format()
    assert "failed" in text.splitlines()[-1]
