"""Re-run the simulation tables and compare against the published reference values.

Each table writes one CSV per setting (one row per replication and metric,
or per significance level for rate tables) and a ``summary.json`` that
lists our value, the reference value and whether it falls inside the
tolerance band.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

from . import reference as ref
from .errors import InvalidArgument
from .evaluation import TestDesign, TuningGrid, run_experiment, run_test_design
from .io import write_json, write_rows_csv
from .simulate import ExperimentSpec, NoiseSpec


@dataclass(frozen=True)
class Profile:
    replications: int
    subsamples: int
    n_panels: int
    grid: TuningGrid


PROFILES = {
    "desk": Profile(20, 500, 10, TuningGrid()),
    "full": Profile(100, 3000, 30, TuningGrid(lambda_A=(0.03, 0.8, 24), rho_u=(0.05, 0.4, 4),
                                              lambda_B=(0.01, 0.15, 14),
                                              lambda_C=(0.005, 0.15, 7))),
    "smoke": Profile(2, 40, 2, TuningGrid(lambda_A=(0.2, 0.5, 2), rho_u=0.1,
                                          lambda_B=(0.03, 0.06, 2), lambda_C=(0.01, 0.03, 2),
                                          rho_v=0.2)),
}

TABLE_IDS = ("table2", "table3", "table4", "table5-7", "table8", "table9")
_ALIASES = {"table5": "table5-7", "table6": "table5-7", "table7": "table5-7",
            "table5..7-comparison": "table5-7", "table5-7-comparison": "table5-7"}


def canonical_table_id(table_id):
    tid = _ALIASES.get(table_id, table_id)
    if tid not in TABLE_IDS:
        raise InvalidArgument(f"unknown table {table_id!r}; choose from {', '.join(TABLE_IDS)}")
    return tid


def band(metric, reference):
    """Half-width of the tolerance band around a reference value."""
    if metric.endswith(("_sen", "_spc")):
        return 0.10
    if metric.endswith("_rank"):
        return 1.5
    if metric.startswith("rate") or metric.startswith("power"):
        return 0.07
    return max(0.10, 0.5 * abs(reference))


def _compare(ours, reference):
    out = {}
    for metric, value in reference.items():
        got = ours.get(metric)
        width = band(metric, value)
        ok = got is not None and not math.isnan(got) and abs(got - value) <= width
        out[metric] = {"ours": got, "reference": value, "band": width, "within_band": bool(ok)}
    return out


def _slug(name):
    return name.replace("'", "prime").replace(".", "").replace(" ", "_").replace("/", "-")


def _estimation_rows(report):
    return [(rep, metric, value) for rep, metric, value in report.csv_rows()]


def _run_estimation(settings, profile, outdir, workers, columns, progress):
    summary = {}
    for name, spec, reference in settings:
        t0 = time.time()
        report = run_experiment(spec, profile.grid, workers=workers)
        write_rows_csv(outdir / f"{_slug(name)}.csv", ("replication", "metric", "value"),
                       _estimation_rows(report))
        means = {k: v["mean"] for k, v in report.summary().items()}
        summary[name] = {
            "comparison": _compare(means, dict(zip(columns, reference))),
            "summary": report.summary(),
            "failures": report.failures,
            "seconds": round(time.time() - t0, 2),
        }
        if progress:
            progress(f"{name}: done in {summary[name]['seconds']} s")
    return summary


def _selected(table, settings):
    if not settings:
        return list(table)
    return [k for k in table if setting_label(k) in settings]


def setting_label(key):
    """Command-line name of a table row: ``A.1``, ``A.2/student-t`` or ``0.5/20/20/2000``."""
    return key if isinstance(key, str) else "/".join(map(str, key))


def _table2(profile, outdir, settings, workers, progress):
    rows = [(name, ExperimentSpec.from_preset(name, replications=profile.replications),
             ref.TABLE2[name]) for name in _selected(ref.TABLE2, settings)]
    return _run_estimation(rows, profile, outdir, workers, ref.ESTIMATION_COLUMNS, progress)


def _table3(profile, outdir, settings, workers, progress):
    rows = []
    for key in _selected(ref.TABLE3, settings):
        name, family = key
        spec = ExperimentSpec.from_preset(name, replications=profile.replications,
                                          noise=NoiseSpec(family=family))
        rows.append((f"{name}/{family}", spec, ref.TABLE3[key]))
    return _run_estimation(rows, profile, outdir, workers, ref.ESTIMATION_COLUMNS, progress)


def _table4(profile, outdir, settings, workers, progress):
    rows = [(name, ExperimentSpec.from_preset(name, replications=profile.replications),
             ref.TABLE4[name]) for name in _selected(ref.TABLE4, settings)]
    return _run_estimation(rows, profile, outdir, workers,
                           ("forecast_x_error", "forecast_z_error"), progress)


def _table5(profile, outdir, settings, workers, progress):
    spec = ExperimentSpec.from_preset("A.1", replications=profile.replications)
    report = run_experiment(spec, profile.grid, workers=workers, forecast=False)
    write_rows_csv(outdir / "A1_comparison.csv", ("replication", "metric", "value"),
                   _estimation_rows(report))
    means = {k: v["mean"] for k, v in report.summary().items()}
    ours_twostep = {c: means.get(c.replace("_", "_twostep_", 1)) for c in ref.COMPARISON_COLUMNS}
    ours_ml = {c: means.get(c) for c in ref.COMPARISON_COLUMNS}
    if progress:
        progress("A.1 comparison: done")
    return {
        "twostep": {"comparison": _compare(ours_twostep,
                                           dict(zip(ref.COMPARISON_COLUMNS, ref.TABLE5["twostep"])))},
        "ml": {"comparison": _compare(ours_ml, dict(zip(ref.COMPARISON_COLUMNS, ref.TABLE5["ml"])))},
        "objective_monotone": {
            "max_increase_A": max(report.metrics.get("A_trace_increase", [0.0])),
            "max_increase_BC": max(report.metrics.get("BC_trace_increase", [0.0])),
        },
        "reference_error_by_iteration": {"A": ref.TABLE6_A_ERROR_BY_ITERATION,
                                         "C": ref.TABLE7_C_ERROR_BY_ITERATION},
        "failures": report.failures,
    }


def _table8(profile, outdir, settings, workers, progress):
    summary = {}
    common = dict(n_subsamples=profile.subsamples, n_panels=profile.n_panels)
    for part, table, kind in (("rank0", ref.TABLE8, "zero"), ("rank5", ref.TABLE8_RANK5, "low-rank")):
        for key in _selected(table, settings):
            rho_c, p1, p2, T = key
            name = f"{part}/rhoC={rho_c}/p1={p1}/p2={p2}/T={T}"
            reference = dict(zip(("rate_0.01", "rate_0.05", "rate_0.1", "power_0.01"), table[key]))
            if kind == "zero":
                size = TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="zero",
                                  method="granger", **common)
                power = TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="low-rank", rank_B=1,
                                   method="granger", alphas=(0.01,), **common)
            else:
                size = TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="low-rank", rank_B=5,
                                  method="rank", r_null=5, **common)
                power = TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="low-rank", rank_B=5,
                                   method="rank", r_null=4, alphas=(0.01,), **common)
            size_res = run_test_design(size)["rates"]
            power_res = run_test_design(power)["rates"]
            got = {"rate_0.01": size_res["0.01"], "rate_0.05": size_res["0.05"],
                   "rate_0.1": size_res["0.1"], "power_0.01": power_res["0.01"]}
            write_rows_csv(outdir / f"{_slug(name)}.csv", ("quantity", "value"),
                           [(k, float(v)) for k, v in got.items()])
            summary[name] = {"comparison": _compare(got, reference)}
            if progress:
                progress(f"{name}: done")
    return summary


def _table9(profile, outdir, settings, workers, progress):
    summary = {}
    common = dict(n_subsamples=profile.subsamples, n_panels=profile.n_panels, method="hc")
    for key in _selected(ref.TABLE9, settings):
        rho_c, p1, p2 = key
        sizes, powers = ref.TABLE9[key]
        for T in sizes:
            name = f"rhoC={rho_c}/p1={p1}/p2={p2}/T={T}"
            size = run_test_design(TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="zero",
                                              **common))["rates"]["rule"]
            power = run_test_design(TestDesign(p1=p1, p2=p2, T=T, rho_C=rho_c, b_kind="sparse",
                                               snr=0.8, **common))["rates"]["rule"]
            got = {"rate_type1": size, "power": power}
            write_rows_csv(outdir / f"{_slug(name)}.csv", ("quantity", "value"),
                           [(k, float(v)) for k, v in got.items()])
            summary[name] = {"comparison": _compare(
                got, {"rate_type1": sizes[T], "power": powers[T]})}
            if progress:
                progress(f"{name}: done")
    return summary


_RUNNERS = {"table2": _table2, "table3": _table3, "table4": _table4, "table5-7": _table5,
            "table8": _table8, "table9": _table9}


def reproduce(table_id, profile="desk", outdir=".", settings=None, workers=None, progress=None):
    """Run one table and write its CSVs and ``summary.json`` under ``outdir/<table>``."""
    tid = canonical_table_id(table_id)
    if profile not in PROFILES:
        raise InvalidArgument(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
    prof = PROFILES[profile]
    target = Path(outdir) / tid
    target.mkdir(parents=True, exist_ok=True)
    body = _RUNNERS[tid](prof, target, settings, workers, progress)
    if not body:
        raise InvalidArgument(f"none of the requested settings {settings} belong to {tid}")
    checks = [c["within_band"] for entry in body.values() if isinstance(entry, dict)
              for c in entry.get("comparison", {}).values()]
    summary = {"table": tid, "profile": profile, "settings": body,
               "within_band": sum(checks), "compared": len(checks)}
    write_json(target / "summary.json", summary)
    return summary
