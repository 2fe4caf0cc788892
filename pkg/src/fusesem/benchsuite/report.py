"""Convergence report rows and CSV emission."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from .metrics import observed_order


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


@dataclass
class ConvergenceRow:
    case: str
    p: int
    level: int
    dofs: int
    errors: dict
    spectral_radius: float | None = None
    wall_time_s: float = 0.0
    seed: int | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class ConvergenceReport:
    case: str
    p: int
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def add(self, row: ConvergenceRow):
        if self.rows and row.dofs <= self.rows[-1].dofs:
            raise ValueError("levels must strictly increase in dofs")
        self.rows.append(row)

    def error_fields(self) -> list:
        fields = []
        for row in self.rows:
            for k in row.errors:
                if k not in fields:
                    fields.append(k)
        return fields

    def errors_of(self, fld: str) -> list:
        return [row.errors[fld] for row in self.rows]

    def observed_orders(self, fld: str) -> list:
        return observed_order(self.errors_of(fld))


def write_report_csv(report: ConvergenceReport, path: str):
    """Emit the report with a reproducibility comment header, atomically."""
    fields = report.error_fields()
    cfg = " ".join(f"{k}={v}" for k, v in sorted(report.config.items()))
    lines = [f"# fusesem {__version__} case={report.case} p={report.p} {cfg}".rstrip()]
    header = ["case", "p", "level", "dofs"]
    header += [f"error_{f}" for f in fields]
    header += [f"order_{f}" for f in fields]
    header += ["spectral_radius", "wall_time_s", "seed"]
    lines.append(",".join(header))
    orders = {}
    for f in fields:
        errs = report.errors_of(f)
        if len(errs) >= 2 and all(e > 0 for e in errs):
            orders[f] = [None] + observed_order(errs)
        else:
            orders[f] = [None] * len(errs)
    for i, row in enumerate(report.rows):
        cells = [report.case, str(report.p), str(row.level), str(row.dofs)]
        cells += [_fmt(row.errors[f]) for f in fields]
        cells += [_fmt(orders[f][i]) for f in fields]
        cells += [_fmt(row.spectral_radius), _fmt(row.wall_time_s),
                  "" if row.seed is None else str(row.seed)]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    fd, tmp = tempfile.mkstemp(suffix=".csv",
                               dir=os.path.dirname(os.path.abspath(path)) or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
