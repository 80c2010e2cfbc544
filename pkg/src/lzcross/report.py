"""Report figures rendered next to the sweep CSV.

Two standard views of a sweep: the off-diagonal transfer entries against
their asymptotic predictions, and the quality diagnostics (determinant,
constancy, unitarity deviations and prediction defect) across the h-grid.
Files land next to the CSV, named <stem>_offdiag.png and
<stem>_diagnostics.png.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

__all__ = ["render_sweep_figures"]


def render_sweep_figures(records: Sequence, out_csv: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in records if r.error is None and r.t is not None]
    if not ok:
        return []
    stem, _ = os.path.splitext(out_csv)
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for path in sorted({r.path for r in ok}):
        rs = [r for r in ok if r.path == path]
        hs = np.array([r.h for r in rs])
        t12 = np.array([abs(complex(r.t[0, 1])) for r in rs])
        ax.loglog(hs, t12, "o-", label=f"|t12| ({path})")
        pred = np.array([abs(r.pred_t12) for r in rs])
        if np.all(np.isfinite(pred)):
            ax.loglog(hs, pred, "k--", alpha=0.6,
                      label="predicted" if path == sorted({r.path for r in ok})[0] else None)
    ax.set_xlabel("h")
    ax.set_ylabel("|t12|")
    ax.invert_xaxis()
    ax.legend()
    ax.set_title("off-diagonal transfer entry vs prediction")
    fig.tight_layout()
    p1 = f"{stem}_offdiag.png"
    fig.savefig(p1, dpi=130)
    plt.close(fig)
    paths.append(p1)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key, label in (("det_dev", "|det T - 1|"),
                       ("const_dev", "constancy spread"),
                       ("unit_dev", "unitarity defect"),
                       ("residual", "solution residual")):
        for path in sorted({r.path for r in ok}):
            rs = [r for r in ok if r.path == path]
            hs = np.array([r.h for r in rs])
            vals = np.array([getattr(r, key) for r in rs])
            vals = np.where(vals > 0, vals, np.nan)
            ax.loglog(hs, vals, "o-", label=f"{label} ({path})")
    defect = []
    hs_d = []
    for r in ok:
        if np.isfinite(r.pred_t12.real):
            defect.append(abs(complex(r.t[0, 1]) - r.pred_t12) / max(r.mu_m, 1e-300))
            hs_d.append(r.h)
    if defect:
        ax.loglog(hs_d, defect, "s--", label="|t12 - pred| / mu_m")
    ax.set_xlabel("h")
    ax.invert_xaxis()
    ax.legend(fontsize=7)
    ax.set_title("sweep diagnostics")
    fig.tight_layout()
    p2 = f"{stem}_diagnostics.png"
    fig.savefig(p2, dpi=130)
    plt.close(fig)
    paths.append(p2)
    return paths
