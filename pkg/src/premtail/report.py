"""Premium CSV ingestion, the per-company analysis pipeline and report output.

Input files have the header ``company,period,premium`` with ``YYYY-MM``
periods. Output tables mirror the three results tables (lognormal, GEV,
GPD): reject flags printed as ``0.000``/``1.000`` next to their p-values.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np

from .diagnostics import (
    PlotSeries,
    density_compare_series,
    excess_cdf_series,
    exp_qq_series,
    hill_plot_series,
    histogram_series,
    mean_excess_series,
    residual_qq_series,
    tail_series,
    zipf_series,
)
from .distributions import DistributionModel, model_from_dict
from .estimation import FitResult, fit_block_maxima, fit_gev, fit_lognormal, fit_pot
from .extremes import BlockSpec, Sample, block_maxima, exceedances, hill_series, select_threshold
from .gof import GofResult, run_tests
from .numerics import SeededRng

log = logging.getLogger(__name__)

__all__ = [
    "DataError",
    "Dataset",
    "RunConfig",
    "FamilyRow",
    "CompanyReport",
    "load_csv",
    "analyze_company",
    "company_stream",
    "diagnostic_series",
    "render_tables",
    "load_reports",
    "emit_plot_files",
    "TABLE_HEADERS",
]

TESTS = ("KS", "ChiSquare", "AD")

TABLE_HEADERS = {
    "lognormal": ["Company Name", "Scale", "Shape", "KS", "KS P", "Chi-Square", "Chi-Square P",
                  "AD", "AD P"],
    "gev": ["Company Name", "Shape", "Scale", "Location", "KS", "KS P", "Chi-Square",
            "Chi-Square P", "AD", "AD P"],
    "gpd": ["Company Name", "Shape", "Scale", "KS", "KS P", "Chi-Square", "Chi-Square P",
            "AD", "AD P"],
}

# table column -> parameter attribute; lognormal mu is reported as "Scale"
# and sigma as "Shape"
_PARAM_COLUMNS = {
    "lognormal": [("Scale", "mu"), ("Shape", "sigma")],
    "gev": [("Shape", "shape"), ("Scale", "scale"), ("Location", "location")],
    "gpd": [("Shape", "shape"), ("Scale", "scale")],
}

_PERIOD = re.compile(r"^(\d{4})-(\d{2})$")


class DataError(ValueError):
    """Malformed or invalid input data."""


@dataclass
class Dataset:
    companies: Dict[str, Sample]
    source_path: str = ""
    warnings: List[str] = field(default_factory=list)


def _month_index(period: str) -> int:
    m = _PERIOD.match(period)
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ValueError(f"bad period {period!r}, expected YYYY-MM")
    return int(m.group(1)) * 12 + int(m.group(2)) - 1


def load_csv(path: Union[str, Path]) -> Dataset:
    """Read a ``company,period,premium`` file into one sample per company.

    Rows are grouped by company and sorted by period. Gaps in the monthly
    sequence produce warnings; malformed rows, nonpositive premiums and
    duplicate periods raise :class:`DataError` naming the line.
    """
    path = Path(path)
    rows: Dict[str, Dict[int, tuple]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["company", "period", "premium"]:
            raise DataError(f"{path}: header must be 'company,period,premium', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            company, period, premium = (c.strip() for c in row)
            if not company:
                raise DataError(f"{path}:{lineno}: empty company name")
            try:
                month = _month_index(period)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            try:
                value = float(premium)
            except ValueError:
                raise DataError(f"{path}:{lineno}: premium {premium!r} is not a number") from None
            if not math.isfinite(value) or value <= 0:
                raise DataError(f"{path}:{lineno}: premium must be positive, got {premium!r}")
            series = rows.setdefault(company, {})
            if month in series:
                raise DataError(f"{path}:{lineno}: duplicate period {period} for {company!r}")
            series[month] = (period, value)

    if not rows:
        raise DataError(f"{path}: no data rows")
    companies, warnings = {}, []
    for company, series in rows.items():
        months = sorted(series)
        missing = (months[-1] - months[0] + 1) - len(months)
        if missing:
            warnings.append(f"{company}: {missing} missing month(s) between "
                            f"{series[months[0]][0]} and {series[months[-1]][0]}")
        companies[company] = Sample(
            np.array([series[m][1] for m in months]),
            label=company,
            period_start=series[months[0]][0],
            period_end=series[months[-1]][0],
        )
    for w in warnings:
        log.warning(w)
    return Dataset(companies, str(path), warnings)


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.05
    bootstrap_reps: int = 1000
    seed: int = 42
    threshold: Union[Literal["auto"], float] = "auto"
    block_count: int = 10
    block_assignment: Literal["contiguous", "random"] = "contiguous"
    method: Literal["pot", "block-maxima"] = "pot"
    p_method: Literal["bootstrap", "asymptotic"] = "bootstrap"
    out_dir: str = "."
    emit_plots: bool = False


@dataclass
class FamilyRow:
    family: str
    params: Optional[DistributionModel]
    tests: Dict[str, GofResult] = field(default_factory=dict)
    method: str = "direct"
    threshold: Optional[float] = None
    n_used: int = 0
    log_likelihood: Optional[float] = None
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params.to_dict() if self.params is not None else None,
            "method": self.method,
            "threshold": self.threshold,
            "n_used": self.n_used,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "tests": {k: v.to_dict() for k, v in self.tests.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FamilyRow":
        params = model_from_dict(data["params"]) if data["params"] is not None else None
        return cls(
            family=data["family"],
            params=params,
            tests={k: GofResult.from_dict(v) for k, v in data["tests"].items()},
            method=data["method"],
            threshold=data["threshold"],
            n_used=data["n_used"],
            log_likelihood=data["log_likelihood"],
            converged=data["converged"],
        )


@dataclass
class CompanyReport:
    company: str
    lognormal_row: FamilyRow
    gev_row: FamilyRow
    gpd_row: FamilyRow
    warnings: List[str] = field(default_factory=list)

    def rows(self) -> Dict[str, FamilyRow]:
        return {"lognormal": self.lognormal_row, "gev": self.gev_row, "gpd": self.gpd_row}

    def to_dict(self) -> dict:
        return {"company": self.company, "warnings": list(self.warnings),
                **{f"{k}_row": v.to_dict() for k, v in self.rows().items()}}

    @classmethod
    def from_dict(cls, data: dict) -> "CompanyReport":
        return cls(
            company=data["company"],
            lognormal_row=FamilyRow.from_dict(data["lognormal_row"]),
            gev_row=FamilyRow.from_dict(data["gev_row"]),
            gpd_row=FamilyRow.from_dict(data["gpd_row"]),
            warnings=list(data["warnings"]),
        )


def company_stream(company: str) -> int:
    """Stable stream id for a company, independent of file order and filters."""
    return zlib.crc32(company.encode("utf-8"))


def _fit_row(family, fitter, data_of, config, rng, warnings) -> FamilyRow:
    try:
        fit: FitResult = fitter()
    except (ValueError, FloatingPointError) as exc:
        warnings.append(f"{family} fit failed: {exc}")
        return FamilyRow(family, None)
    if not fit.converged:
        warnings.append(f"{family} fit did not converge")
    row = FamilyRow(family, fit.model, method=fit.method, threshold=fit.threshold,
                    n_used=fit.n_used, log_likelihood=fit.log_likelihood, converged=fit.converged)
    try:
        row.tests = run_tests(data_of(fit), fit.model, alpha=config.alpha,
                              p_method=config.p_method, reps=config.bootstrap_reps, rng=rng)
    except (ValueError, RuntimeError) as exc:
        warnings.append(f"{family} tests failed: {exc}")
    return row


def analyze_company(sample: Sample, config: RunConfig, rng: SeededRng) -> CompanyReport:
    """Fit all three families to one company and run the three tests on each.

    Lognormal is fitted to the full series. GEV is fitted to the full series
    in ``pot`` mode and to the block maxima in ``block-maxima`` mode. GPD is
    fitted to the exceedances over the configured or Hill-selected threshold.
    Each family's bootstrap uses its own derived stream of ``rng``. A family
    that fails is recorded in ``warnings`` and left without parameters.
    """
    n = len(sample)
    if n < 30:
        raise ValueError(f"{sample.label}: need at least 30 observations, got {n}")
    warnings: List[str] = []
    if n < 60:
        warnings.append(f"short series ({n} observations)")
    x = sample.values

    lognormal = _fit_row("lognormal", lambda: fit_lognormal(x), lambda f: x,
                         config, rng.spawn(0), warnings)
    if config.method == "block-maxima":
        spec = BlockSpec(config.block_count, config.block_assignment, config.seed)
        gev = _fit_row("gev", lambda: fit_block_maxima(x, spec), lambda f: block_maxima(x, spec),
                       config, rng.spawn(1), warnings)
    else:
        gev = _fit_row("gev", lambda: fit_gev(x), lambda f: x, config, rng.spawn(1), warnings)
    gpd = _fit_row("gpd", lambda: fit_pot(x, config.threshold),
                   lambda f: exceedances(x, f.threshold).exceedances,
                   config, rng.spawn(2), warnings)
    return CompanyReport(sample.label, lognormal, gev, gpd, warnings)


def diagnostic_series(sample: Sample, report: Optional[CompanyReport] = None,
                      config: Optional[RunConfig] = None) -> List[PlotSeries]:
    """Plot series for one company.

    Without a report only the model-free diagnostics are built (histogram,
    exponential QQ, Zipf, mean excess, Hill). With a report the fitted-model
    series are added as well.
    """
    config = config or RunConfig()
    x = sample.values
    hill = hill_series(x)
    choice = None
    try:
        choice = select_threshold(hill, min_k=6)
    except ValueError:
        pass
    out = [histogram_series(x), exp_qq_series(x), zipf_series(x)]

    if report is None:
        out.append(mean_excess_series(x))
        out.append(hill_plot_series(hill, choice))
        return out

    gpd_fit = gev_fit = None
    row = report.gpd_row
    if row.params is not None:
        exc = exceedances(x, row.threshold)
        gpd_fit = FitResult(row.params, row.log_likelihood, "pot", threshold=row.threshold,
                            n_used=exc.n_exceed, n_total=exc.n_total)
    out.append(mean_excess_series(x, gpd_fit))
    hill_plot = hill_plot_series(hill, choice)
    if row.threshold is not None:
        hill_plot.meta["threshold"] = row.threshold
    out.append(hill_plot)

    row = report.gev_row
    if row.params is not None:
        gev_data = x
        if row.method == "block-maxima":
            gev_data = block_maxima(x, BlockSpec(config.block_count, config.block_assignment,
                                                 config.seed))
        gev_fit = FitResult(row.params, row.log_likelihood, row.method, n_used=row.n_used)
        out.append(residual_qq_series(gev_fit, gev_data))
        if gev_data.size >= 10:
            out.append(density_compare_series(gev_data, gev_fit))
    if gpd_fit is not None:
        out.append(excess_cdf_series(exc, gpd_fit))
        out.append(tail_series(x, gpd_fit))
    return out


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def _table_row(company: str, row: FamilyRow) -> List[str]:
    cells = [company]
    for _, attr in _PARAM_COLUMNS[row.family]:
        cells.append(_fmt(getattr(row.params, attr)) if row.params is not None else "")
    for test in TESTS:
        res = row.tests.get(test)
        if res is None:
            cells += ["", ""]
        else:
            cells += [_fmt(float(res.reject)), _fmt(res.p_value)]
    return cells


def render_tables(reports: Sequence[CompanyReport], out_dir: Union[str, Path],
                  fmt: Literal["csv", "json"] = "csv") -> List[Path]:
    """Write ``table_lognormal``, ``table_gev`` and ``table_gpd`` files.

    CSV files follow the results-table layout with three-decimal cells. JSON
    files hold one full row record per company so :func:`load_reports` can
    rebuild the reports exactly.
    """
    if not reports:
        raise ValueError("no reports to render")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for family in ("lognormal", "gev", "gpd"):
        path = out_dir / f"table_{family}.{fmt}"
        try:
            if fmt == "csv":
                with path.open("w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(TABLE_HEADERS[family])
                    for rep in reports:
                        writer.writerow(_table_row(rep.company, rep.rows()[family]))
            elif fmt == "json":
                records = [{"company": rep.company, "warnings": rep.warnings,
                            **rep.rows()[family].to_dict()} for rep in reports]
                path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
            else:
                raise ValueError(f"unknown format {fmt!r}")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths


def load_reports(out_dir: Union[str, Path]) -> List[CompanyReport]:
    """Rebuild reports from the JSON tables written by :func:`render_tables`."""
    out_dir = Path(out_dir)
    tables = {
        family: json.loads((out_dir / f"table_{family}.json").read_text(encoding="utf-8"))
        for family in ("lognormal", "gev", "gpd")
    }
    reports = []
    for i, rec in enumerate(tables["lognormal"]):
        rows = {}
        for family in ("lognormal", "gev", "gpd"):
            data = dict(tables[family][i])
            data.pop("company"), data.pop("warnings")
            rows[f"{family}_row"] = data
        reports.append(CompanyReport.from_dict(
            {"company": rec["company"], "warnings": rec["warnings"], **rows}))
    return reports


def _meta_value(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _safe_name(company: str) -> str:
    return re.sub(r"[^\w.-]+", "_", company.strip())


def emit_plot_files(company: str, series: Sequence[PlotSeries],
                    out_dir: Union[str, Path]) -> List[Path]:
    """One CSV per series, ``<company>_<name>.csv``, meta as ``# key=value`` lines."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in series:
        path = out_dir / f"{_safe_name(company)}_{s.name}.csv"
        lines = [f"# {k}={_meta_value(v)}" for k, v in s.meta.items()]
        cols = ["x", "y", *s.extra]
        lines.append(",".join(cols))
        data = np.column_stack([s.x, s.y, *s.extra.values()])
        lines += [",".join(repr(float(v)) for v in row) for row in data]
        try:
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths
