"""Command-line surface.

Subcommands: fit (pilot corrected lasso only), infer (debiased estimates and
intervals), bands (infer with the simultaneous band always on), graph
(conditional-association edges among the columns), simulate (Monte Carlo
studies).  Exit codes: 0 success, 2 input error, 3 numerical error,
4 degeneracy.

Reports never include wall-clock data or the worker count, so a rerun with
the same seed is byte-identical regardless of parallelism.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import dataio, reports, simstudy
from .bootstrap import critical_value, multiplier_maxima, simultaneous_bands
from .debias import (
    VARIANCE_CONVENTIONS,
    prepare_pilot,
    run_inference,
)
from .errors import DegeneracyError, InputError, NumericalError
from .lasso import Dataset, NoiseSpec, SolverConfig


class _Parser(argparse.ArgumentParser):
    # surface argparse's own failures through the normal exit-code path
    def error(self, message):
        raise InputError(message)


def _positive(value: float, flag: str) -> float:
    if not value > 0:
        raise InputError(f"{flag} must be positive (got {value})")
    return value


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InputError(
            f"--alpha must lie strictly between 0 and 1 (got {alpha})")
    return alpha


def _check_seed(seed: int) -> int:
    if not 0 <= seed < 2 ** 64:
        raise InputError(f"--seed must be an unsigned 64-bit integer (got {seed})")
    return seed


def _check_common(args) -> None:
    _check_alpha(args.alpha)
    _check_seed(args.seed)
    if args.boot < 1:
        raise InputError(f"--boot must be at least 1 (got {args.boot})")
    if args.workers < 1:
        raise InputError(f"--workers must be at least 1 (got {args.workers})")
    _positive(args.lambda_scale, "--lambda-scale")
    if args.tol is not None:
        _positive(args.tol, "--tol")
    if args.max_iter is not None and args.max_iter < 1:
        raise InputError(f"--max-iter must be at least 1 (got {args.max_iter})")


def _solver_from(args, base: SolverConfig = SolverConfig()) -> SolverConfig:
    changes = {"penalty_scale": base.penalty_scale * args.lambda_scale}
    if args.tol is not None:
        changes["tol"] = args.tol
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    return dataclasses.replace(base, **changes)


def _resolve_targets(spec: str, names: list[str]) -> list[int]:
    """Parse --targets: 'all', or a comma list of names / 1-based positions."""
    if spec.strip() == "all":
        return list(range(len(names)))
    out = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            raise InputError("--targets has an empty entry")
        if token in names:
            out.append(names.index(token))
            continue
        try:
            pos = int(token)
        except ValueError:
            raise InputError(
                f"--targets entry {token!r} is neither a column name nor a "
                "1-based position") from None
        if not 1 <= pos <= len(names):
            raise InputError(
                f"--targets position {pos} out of range 1..{len(names)}")
        out.append(pos - 1)
    if len(set(out)) != len(out):
        raise InputError("--targets lists a column twice")
    return out


def _load_regression(args) -> tuple[Dataset, list[str], NoiseSpec, str]:
    data, names = dataio.read_dataset_csv(args.input, require_response=True,
                                          allow_missing=args.mar)
    if args.mar:
        return data, names, NoiseSpec.mar(), "estimated"
    gamma = dataio.read_noise_csv(args.gamma, len(names))
    return data, names, NoiseSpec.known(gamma), args.gamma


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    _check_common(args)
    data, names, noise, gamma_source = _load_regression(args)
    cfg = _solver_from(args)
    prepared = prepare_pilot(data, noise, cfg)
    settings = {"n": data.n, "p": data.p, "gamma_source": gamma_source,
                **reports.fit_settings(prepared.fit, cfg.truncation)}
    if args.format == "records":
        text = reports.render_records(
            reports.fit_records(prepared.fit, names, settings))
    else:
        text = reports.fit_table(prepared.fit, names, settings)
    _emit(args, text)
    return 0


def _cmd_infer(args, force_bands: bool) -> int:
    _check_common(args)
    data, names, noise, gamma_source = _load_regression(args)
    targets = _resolve_targets(args.targets, names)
    cfg = _solver_from(args)
    table = run_inference(data, noise, targets, args.alpha, cfg,
                          args.variance_at, workers=args.workers)
    band = None
    if force_bands or args.bands or len(targets) >= 2:
        band = simultaneous_bands(table, args.boot, args.seed)
    if args.format == "records":
        text = reports.render_records(
            reports.inference_records(table, band, names, gamma_source))
    else:
        text = reports.inference_table(table, band, names, gamma_source)
    _emit(args, text)
    return 0


def cmd_infer(args) -> int:
    return _cmd_infer(args, force_bands=False)


def cmd_bands(args) -> int:
    return _cmd_infer(args, force_bands=True)


def cmd_graph(args) -> int:
    _check_common(args)
    if args.mar:
        raise InputError(
            "graph mode does not support --mar; provide --gamma with known "
            "noise variances")
    data, names = dataio.read_dataset_csv(args.input, require_response=False,
                                          allow_missing=False)
    p = data.p
    gamma = dataio.read_noise_csv(args.gamma, p)
    sources = _resolve_targets(args.targets, names)
    cfg = _solver_from(args)

    nodes, edge_cells = [], []
    for j in sources:
        keep = np.arange(p) != j
        sub = Dataset(y=data.Z[:, j], Z=data.Z[:, keep])
        partners = [k for k in range(p) if k != j]
        table = run_inference(sub, NoiseSpec.known(gamma[keep]),
                              list(range(p - 1)), args.alpha, cfg,
                              args.variance_at, workers=args.workers)
        nodes.append({"name": names[j], "index": j + 1,
                      "penalty": table.pilot.penalty,
                      "radius": table.pilot.radius,
                      "iterations": table.pilot.iterations,
                      "converged": bool(table.pilot.converged),
                      "kkt_residual": table.pilot.kkt_residual})
        for cell, k in zip(table.cells, partners):
            edge_cells.append((j, k, cell))

    scores = np.column_stack([cell.scores for _, _, cell in edge_cells])
    draws = multiplier_maxima(scores, args.boot, args.seed)
    crit = critical_value(draws, args.alpha)
    root_n = math.sqrt(data.n)
    edges = []
    for j, k, cell in edge_cells:
        half = crit * cell.sd / root_n
        lo, hi = cell.estimate - half, cell.estimate + half
        edges.append({"source": names[j], "source_index": j + 1,
                      "partner": names[k], "partner_index": k + 1,
                      "estimate": cell.estimate, "sd": cell.sd,
                      "band_low": lo, "band_high": hi,
                      "zero_in_band": bool(lo <= 0.0 <= hi)})

    settings = {"n": data.n, "p": p, "alpha": args.alpha,
                "gamma_source": args.gamma, "draws": args.boot,
                "seed": args.seed, "critical_value": crit,
                "variance_at": args.variance_at, "edges": len(edges)}
    if args.format == "records":
        text = reports.render_records(
            reports.graph_records(settings, nodes, edges))
    else:
        text = reports.graph_table(settings, edges)
    _emit(args, text)
    return 0


def _study_config(args) -> simstudy.SimConfig:
    if args.alpha is not None:
        _check_alpha(args.alpha)
    if args.boot is not None and args.boot < 1:
        raise InputError(f"--boot must be at least 1 (got {args.boot})")
    if args.replications is not None and args.replications < 1:
        raise InputError(
            f"--replications must be at least 1 (got {args.replications})")
    if args.seed is not None:
        _check_seed(args.seed)

    # precedence: preset defaults < config file < explicit flags
    file_over = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                file_over = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(file_over, dict):
            raise InputError(f"{args.config}: expected a JSON object")
        known = {f.name for f in dataclasses.fields(simstudy.SimConfig)}
        bad = sorted(set(file_over) - known - {"solver"})
        if bad:
            raise InputError(f"{args.config}: unknown study fields {bad}")
    solver_over = file_over.pop("solver", {})
    # the truth vector and target set override the preset layout afterwards;
    # everything else feeds the preset builder so dimensions stay consistent
    structural = {key: file_over.pop(key)
                  for key in ("beta0", "targets", "null_values")
                  if key in file_over}

    kwargs = dict(file_over)
    if args.full:
        kwargs.update(n=350, p=300, replications=500)
    for flag, field in (("n", "n"), ("p", "p"), ("seed", "seed"),
                        ("method", "method"),
                        ("replications", "replications"),
                        ("sigma_w", "measurement_sd"),
                        ("alpha", "alpha"), ("boot", "boot_draws"),
                        ("variance_at", "variance_at"),
                        ("miss_prob", "miss_prob"),
                        ("noise_mode", "noise_mode")):
        value = getattr(args, flag)
        if value is not None:
            kwargs[field] = value
    if args.preset == "multi":
        builder = simstudy.multi_target_study
    else:
        builder = simstudy.single_target_study
        if args.target_value is not None:
            kwargs["target_value"] = args.target_value
    cfg = builder(solver=simstudy.STUDY_SOLVER, **kwargs)

    if structural:
        if "beta0" in structural:
            structural["beta0"] = np.asarray(structural["beta0"], dtype=float)
        if "targets" in structural:
            structural["targets"] = tuple(
                int(t) - 1 for t in structural["targets"])
        if "null_values" in structural:
            structural["null_values"] = tuple(structural["null_values"])
        cfg = dataclasses.replace(cfg, **structural)
    if solver_over:
        cfg = dataclasses.replace(
            cfg, solver=dataclasses.replace(cfg.solver, **solver_over))
    if args.lambda_scale != 1.0:
        _positive(args.lambda_scale, "--lambda-scale")
        cfg = dataclasses.replace(cfg, solver=dataclasses.replace(
            cfg.solver,
            penalty_scale=cfg.solver.penalty_scale * args.lambda_scale))
    if args.tol is not None or args.max_iter is not None:
        changes = {}
        if args.tol is not None:
            changes["tol"] = _positive(args.tol, "--tol")
        if args.max_iter is not None:
            if args.max_iter < 1:
                raise InputError(
                    f"--max-iter must be at least 1 (got {args.max_iter})")
            changes["max_iter"] = args.max_iter
        cfg = dataclasses.replace(
            cfg, solver=dataclasses.replace(cfg.solver, **changes))
    return cfg


def cmd_simulate(args) -> int:
    if args.workers < 1:
        raise InputError(f"--workers must be at least 1 (got {args.workers})")
    cfg = _study_config(args)
    if args.dump_data:
        first = simstudy.generate(cfg, 0)
        dataio.write_dataset_csv(args.dump_data, first,
                                 reports.default_names(cfg.p))
    report = simstudy.run_study(cfg, workers=args.workers)
    if args.format == "records":
        text = reports.render_records(reports.study_records(cfg, report))
    else:
        text = reports.study_table(cfg, report)
    _emit(args, text)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_io_flags(sub, gamma_required: bool = True) -> None:
    sub.add_argument("--input", required=True, help="dataset CSV path")
    group = sub.add_mutually_exclusive_group(required=gamma_required)
    group.add_argument("--gamma", help="noise-variance file, one value per line")
    group.add_argument("--mar", action="store_true",
                       help="treat NA/empty cells as missing at random and "
                            "estimate the noise variances")


def _add_shared_flags(sub) -> None:
    sub.add_argument("--alpha", type=float, default=0.05,
                     help="level: intervals cover at 1 - alpha (default 0.05)")
    sub.add_argument("--boot", type=int, default=1000,
                     help="bootstrap draws (default 1000)")
    sub.add_argument("--seed", type=int, default=0,
                     help="bootstrap seed (default 0)")
    sub.add_argument("--lambda-scale", type=float, default=1.0,
                     dest="lambda_scale",
                     help="multiplier on the default l1 penalty (default 1.0)")
    sub.add_argument("--variance-at", choices=VARIANCE_CONVENTIONS,
                     default="debiased", dest="variance_at",
                     help="where the plug-in variance evaluates the scores")
    sub.add_argument("--tol", type=float, default=None,
                     help="solver stationarity tolerance")
    sub.add_argument("--max-iter", type=int, default=None, dest="max_iter",
                     help="solver iteration cap")
    sub.add_argument("--workers", type=int, default=1,
                     help="parallel workers; never changes results")
    sub.add_argument("--out", help="write the report here instead of stdout")
    sub.add_argument("--format", choices=("table", "records"),
                     default="table",
                     help="human table or line-delimited JSON records")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eivbands",
                     description="Debiased inference for high-dimensional "
                                 "regression with noisy or partially missing "
                                 "covariates.")
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="pilot corrected lasso only")
    _add_io_flags(fit)
    _add_shared_flags(fit)
    fit.set_defaults(func=cmd_fit)

    infer = subs.add_parser("infer", help="debiased estimates and intervals")
    _add_io_flags(infer)
    infer.add_argument("--targets", default="all",
                       help="comma list of column names or 1-based positions, "
                            "or 'all' (default)")
    infer.add_argument("--bands", action="store_true",
                       help="add the simultaneous band even for one target")
    _add_shared_flags(infer)
    infer.set_defaults(func=cmd_infer)

    bands = subs.add_parser("bands",
                            help="like infer with the simultaneous band "
                                 "always on")
    _add_io_flags(bands)
    bands.add_argument("--targets", default="all")
    _add_shared_flags(bands)
    bands.set_defaults(func=cmd_bands, bands=True)

    graph = subs.add_parser("graph",
                            help="conditional-association edges among all "
                                 "columns (no response needed)")
    _add_io_flags(graph)
    graph.add_argument("--targets", default="all",
                       help="source nodes to scan (default all)")
    _add_shared_flags(graph)
    graph.set_defaults(func=cmd_graph)

    sim = subs.add_parser("simulate", help="Monte Carlo size/FWER studies")
    sim.add_argument("--preset", choices=("single", "multi"),
                     default="single",
                     help="single-target size study or multi-target "
                          "family-wise study")
    sim.add_argument("--method", choices=("eiv", "naive"), default=None,
                     help="noise-corrected pipeline or the naive baseline")
    sim.add_argument("--target-value", type=float, default=None,
                     dest="target_value",
                     help="true target coefficient for the single preset")
    sim.add_argument("--noise-mode", choices=("known", "mar"), default=None,
                     dest="noise_mode")
    sim.add_argument("--miss-prob", type=float, default=None,
                     dest="miss_prob",
                     help="cell missingness rate in mar mode")
    sim.add_argument("--sigma-w", type=float, default=None, dest="sigma_w",
                     help="measurement noise standard deviation")
    sim.add_argument("--n", type=int, default=None, help="sample size")
    sim.add_argument("--p", type=int, default=None, help="dimension")
    sim.add_argument("--replications", type=int, default=None)
    sim.add_argument("--full", action="store_true",
                     help="full-scale design (n=350, p=300, 500 replications)")
    sim.add_argument("--config",
                     help="JSON file of study-config field overrides")
    sim.add_argument("--dump-data",
                     help="also write replication 0 as a dataset CSV here")
    sim.add_argument("--alpha", type=float, default=None)
    sim.add_argument("--boot", type=int, default=None,
                     help="bootstrap draws per replication")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--lambda-scale", type=float, default=1.0,
                     dest="lambda_scale",
                     help="multiplier on the study penalty scale")
    sim.add_argument("--variance-at", choices=VARIANCE_CONVENTIONS,
                     default=None, dest="variance_at")
    sim.add_argument("--tol", type=float, default=None)
    sim.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", help="write the report here instead of stdout")
    sim.add_argument("--format", choices=("table", "records"),
                     default="table")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except DegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
