"""Report rendering: aligned text tables and line-delimited JSON records.

The machine format is one JSON object per line with sorted keys and a
schema_version field on the run header; identical inputs render to identical
bytes (floats go through repr, so values survive a parse round trip).  The
human format shows the same numbers; nothing in either format depends on
wall clock, host, or worker count.
"""

from __future__ import annotations

import json

import numpy as np

SCHEMA_VERSION = 1


def default_names(p: int) -> list[str]:
    return [f"z{k + 1}" for k in range(p)]


def _jsonable(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def render_records(records: list[dict]) -> str:
    lines = [json.dumps(_jsonable(r), sort_keys=True) for r in records]
    return "\n".join(lines) + "\n"


def run_header(command: str, settings: dict) -> dict:
    header = {"record": "run", "schema_version": SCHEMA_VERSION,
              "command": command}
    header.update(settings)
    return header


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def render_table(title: str, settings: dict, columns: list[str],
                 rows: list[list]) -> str:
    """Aligned text block: a settings preamble then one row per entry."""
    out = [title]
    for key, value in settings.items():
        out.append(f"  {key} = {_fmt(value)}")
    if rows:
        cells = [[_fmt(v) for v in row] for row in rows]
        widths = [max(len(columns[k]), *(len(r[k]) for r in cells))
                  for k in range(len(columns))]
        out.append("")
        out.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)))
        out.append("  ".join("-" * w for w in widths))
        for r in cells:
            out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# fit reports


def fit_settings(fit, truncation: float) -> dict:
    return {"penalty": fit.penalty, "radius": fit.radius,
            "truncation": truncation, "iterations": fit.iterations,
            "converged": bool(fit.converged),
            "kkt_residual": fit.kkt_residual, "objective": fit.objective}


def fit_records(fit, names: list[str], settings: dict) -> list[dict]:
    records = [run_header("fit", settings)]
    for j in np.flatnonzero(fit.beta):
        records.append({"record": "coefficient", "index": int(j) + 1,
                        "name": names[j], "value": float(fit.beta[j])})
    return records


def fit_table(fit, names: list[str], settings: dict) -> str:
    rows = [[names[j], int(j) + 1, float(fit.beta[j])]
            for j in np.flatnonzero(fit.beta)]
    return render_table("corrected lasso fit", settings,
                        ["name", "index", "coefficient"], rows)


# ---------------------------------------------------------------------------
# inference reports


def inference_settings(table, gamma_source: str) -> dict:
    return {"n": table.n, "p": len(table.pilot.beta), "alpha": table.alpha,
            "noise": table.noise_kind, "gamma_source": gamma_source,
            "variance_at": table.variance_at,
            "penalty": table.pilot.penalty, "radius": table.pilot.radius,
            "pilot_iterations": table.pilot.iterations,
            "pilot_converged": bool(table.pilot.converged)}


def inference_records(table, band, names: list[str],
                      gamma_source: str) -> list[dict]:
    settings = inference_settings(table, gamma_source)
    if band is not None:
        settings["draws"] = band.draws
        settings["seed"] = band.seed
    records = [run_header("infer", settings)]
    if band is not None:
        records.append({"record": "band", "critical_value": band.critical_value,
                        "alpha": band.alpha, "draws": band.draws,
                        "seed": band.seed})
    for k, cell in enumerate(table.cells):
        rec = {"record": "target", "index": cell.j + 1, "name": names[cell.j],
               "estimate": cell.estimate, "sd": cell.sd,
               "ci_low": cell.ci_low, "ci_high": cell.ci_high}
        if band is not None:
            rec["band_low"] = float(band.lower[k])
            rec["band_high"] = float(band.upper[k])
        records.append(rec)
    return records


def inference_table(table, band, names: list[str], gamma_source: str) -> str:
    settings = inference_settings(table, gamma_source)
    columns = ["name", "estimate", "sd", "ci_low", "ci_high"]
    if band is not None:
        settings["draws"] = band.draws
        settings["seed"] = band.seed
        settings["critical_value"] = band.critical_value
        columns += ["band_low", "band_high"]
    rows = []
    for k, cell in enumerate(table.cells):
        row = [names[cell.j], cell.estimate, cell.sd, cell.ci_low, cell.ci_high]
        if band is not None:
            row += [float(band.lower[k]), float(band.upper[k])]
        rows.append(row)
    return render_table("debiased inference", settings, columns, rows)


# ---------------------------------------------------------------------------
# graph reports


def graph_records(settings: dict, nodes: list[dict],
                  edges: list[dict]) -> list[dict]:
    records = [run_header("graph", settings)]
    for node in nodes:
        records.append({"record": "node", **node})
    for edge in edges:
        records.append({"record": "edge", **edge})
    return records


def graph_table(settings: dict, edges: list[dict]) -> str:
    rows = [[e["source"], e["partner"], e["estimate"], e["band_low"],
             e["band_high"], e["zero_in_band"]] for e in edges]
    return render_table("conditional-association graph", settings,
                        ["source", "partner", "estimate", "band_low",
                         "band_high", "zero_in_band"], rows)


# ---------------------------------------------------------------------------
# study reports


def study_settings(cfg) -> dict:
    support = np.flatnonzero(cfg.beta0)
    return {"n": cfg.n, "p": cfg.p, "measurement_sd": cfg.measurement_sd,
            "model_sd": cfg.model_sd, "ar_rho": cfg.ar_rho,
            "method": cfg.method, "noise_mode": cfg.noise_mode,
            "miss_prob": cfg.miss_prob, "replications": cfg.replications,
            "alpha": cfg.alpha, "boot_draws": cfg.boot_draws,
            "seed": cfg.seed, "variance_at": cfg.variance_at,
            "targets": [int(j) + 1 for j in cfg.targets],
            "null_values": list(cfg.null_values),
            "beta_support": [int(j) + 1 for j in support],
            "beta_values": [float(cfg.beta0[j]) for j in support],
            "penalty_scale": cfg.solver.penalty_scale,
            "tol": cfg.solver.tol, "max_iter": cfg.solver.max_iter}


def study_records(cfg, report) -> list[dict]:
    records = [run_header("simulate", study_settings(cfg))]
    records.append({"record": "aggregate",
                    "rejection_rate": report.rejection_rate,
                    "mean_bias": report.mean_bias,
                    "rejection_se": report.rejection_se,
                    "replications": report.replications,
                    "completed": report.completed,
                    "failures": report.failures})
    for r in report.records:
        records.append({"record": "replication", **r})
    return records


def study_table(cfg, report) -> str:
    settings = study_settings(cfg)
    settings.update({"rejection_rate": report.rejection_rate,
                     "mean_bias": report.mean_bias,
                     "rejection_se": report.rejection_se,
                     "completed": report.completed,
                     "failures": report.failures})
    rows = []
    for r in report.records:
        if r.get("failed"):
            rows.append([r["rep"], "failed", r["error_kind"], "", ""])
        else:
            rows.append([r["rep"], "ok", "", r["reject"],
                         float(np.mean(r["biases"]))])
    return render_table("simulation study", settings,
                        ["rep", "status", "error", "reject", "mean_bias"],
                        rows)
