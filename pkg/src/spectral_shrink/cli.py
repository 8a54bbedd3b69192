"""Command-line front end: ``spectral-shrink {shrink,wigner,tables,simulate}``.

Exit codes: 0 success, 2 usage/config/parse error, 3 numeric or domain
error, 4 a configured assertion failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError, ContractError, DomainError, ShrinkError
from .estimators import EigenSystem, calibrate_noise, cov_shrink, sample_covariance, wigner_denoise
from .matrix_io import MatrixParseError, format_float, read_matrix, write_csv_rows, write_matrix
from .montecarlo import evaluate_assertions, run_experiment
from .shrinkage import (
    Norm,
    RuleKind,
    ShrinkageRule,
    agnostic_threshold,
    agnostic_threshold_spike,
    optimal_eta_formal,
    optimal_loss_formal,
    optimal_threshold,
    rank_aware_loss,
    regret_and_improvement,
    threshold_crossing_spike,
)
from .spike_maps import Framework, FrameworkKind, cosine2, eigmap, eigmap_inv, to_bar, to_hat

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_ASSERT = 4


class UsageError(ShrinkError):
    pass


def _framework_arg(text: str) -> Framework:
    try:
        return Framework.parse(text)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _floats(values) -> list[float]:
    return [float(x) for x in np.asarray(values, dtype=float).ravel()]


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


# -- shrink ---------------------------------------------------------------------


def _resolve_gamma(args, p: int, n_data: int | None) -> float | None:
    if args.gamma is not None:
        return float(args.gamma)
    n = n_data if n_data is not None else args.n
    return p / n if n else None


def cmd_shrink(args) -> int:
    data = read_matrix(args.input, header=args.header)
    if args.from_data:
        p, n_data = data.shape
        s = sample_covariance(data)
    else:
        s, n_data = data, None
        p = s.shape[0]
    gamma_n = _resolve_gamma(args, p, n_data)

    rule_name = args.rule
    fw_text = args.framework
    if rule_name == "identity":
        rank = p if args.rank is None else args.rank
        kind = RuleKind.IDENTITY
    else:
        if args.rank is None:
            raise UsageError("--rank is required for this rule")
        rank = args.rank
        kind = {"optimal": RuleKind.OPTIMAL, "agnostic": RuleKind.AGNOSTIC, "threshold": RuleKind.HARD_THRESHOLD}[rule_name]
    if fw_text == "auto":
        # proportional formulas at the data's own aspect ratio
        if gamma_n is None:
            raise UsageError("--framework auto needs --gamma, --n, or --from-data")
        framework = Framework.proportional(gamma_n)
        if kind is RuleKind.OPTIMAL:
            kind = RuleKind.AGNOSTIC
    else:
        framework = _framework_arg(fw_text)
        if framework.kind is FrameworkKind.WIGNER:
            raise UsageError("use the wigner command for Wigner matrices")
    if framework.kind is FrameworkKind.PROPORTIONAL and gamma_n is None:
        gamma_n = framework.gamma
    needs_gamma = kind is not RuleKind.IDENTITY
    if gamma_n is None:
        if needs_gamma:
            raise UsageError("aspect ratio unknown: pass --gamma, --n, or --from-data")
        gamma_n = 1.0

    rule = ShrinkageRule(
        kind, framework, gamma_n, rank_r=rank, norm=Norm.parse(args.loss) if kind is not RuleKind.IDENTITY else None,
        operator_epsilon=args.epsilon, p=p, threshold=args.threshold, operator_bulk_edge=args.bulk_edge,
    )
    es = EigenSystem.from_symmetric(s)
    sigma2 = None
    if args.calibrate:
        sigma2 = calibrate_noise(es.values, (n_data if n_data is not None else (args.n or p), p))
        if not sigma2 > 0:
            raise ShrinkError("calibrated noise level is not positive")
        sigma_hat, shrunk = cov_shrink(s / sigma2, rule)
        sigma_hat, shrunk = sigma_hat * sigma2, shrunk * sigma2
    else:
        sigma_hat, shrunk = cov_shrink(s, rule)

    write_matrix(args.output, sigma_hat)
    lead = es.values[:rank] / (sigma2 or 1.0)
    if framework.kind is FrameworkKind.DINF:
        spikes = np.asarray(eigmap_inv(to_bar(lead, gamma_n), framework).value)
        scale = "bar"
    elif framework.kind is FrameworkKind.PROPORTIONAL or kind is RuleKind.AGNOSTIC:
        spikes = np.asarray(eigmap_inv(lead, Framework.proportional(gamma_n)).value)
        scale = "raw"
    else:
        spikes = np.asarray(eigmap_inv(to_hat(lead, gamma_n), Framework.dzero()).value)
        scale = "hat"
    sidecar = {
        "input": str(args.input),
        "rule": rule.label(),
        "framework": "auto" if fw_text == "auto" else framework.label(),
        "gamma_n": gamma_n,
        "rank": rank,
        "sigma2": sigma2,
        "original_eigenvalues": _floats(es.values),
        "shrunk_eigenvalues": _floats(shrunk),
        "estimated_spikes": {"scale": scale, "values": _floats(spikes)},
    }
    _write_json(Path(str(args.output) + ".json"), sidecar)
    return EXIT_OK


# -- wigner -----------------------------------------------------------------------


def cmd_wigner(args) -> int:
    y = read_matrix(args.input, header=args.header)
    theta_hat, shrunk = wigner_denoise(y, Norm.parse(args.loss), args.rank_plus, args.rank_minus)
    write_matrix(args.output, theta_hat)
    es = EigenSystem.from_symmetric(y)
    _write_json(
        Path(str(args.output) + ".json"),
        {"input": str(args.input), "loss": args.loss, "rank_plus": args.rank_plus, "rank_minus": args.rank_minus,
         "original_eigenvalues": _floats(es.values), "shrunk_eigenvalues": _floats(shrunk)},
    )
    return EXIT_OK


# -- tables --------------------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            k = int(k)
            if k < 1:
                raise ValueError
            return np.linspace(float(a), float(b), k)
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}; use start:stop:count or a comma list") from exc


def _table_rows(which: str, fw: Framework, grid: np.ndarray) -> tuple[list[str], list[dict]]:
    if which == "thresholds":
        rows = []
        for norm in Norm:
            if fw.kind is FrameworkKind.PROPORTIONAL:
                rows.append({"norm": norm.value, "threshold": agnostic_threshold(fw.gamma, norm),
                             "crossing_spike": agnostic_threshold_spike(fw.gamma, norm)})
            else:
                rows.append({"norm": norm.value, "threshold": optimal_threshold(norm, fw),
                             "crossing_spike": threshold_crossing_spike(norm, fw)})
        return ["norm", "threshold", "crossing_spike"], rows
    if which == "shrinkers":
        rows = []
        for x in grid:
            row = {"spike": float(x), "eigenvalue": float(eigmap(x, fw)), "cosine2": float(cosine2(x, fw))}
            for norm in Norm:
                row[f"eta_{norm.value}"] = float(optimal_eta_formal(x, norm, fw))
            rows.append(row)
        return ["spike", "eigenvalue", "cosine2", "eta_F", "eta_O", "eta_N"], rows
    if which == "losses":
        rows = [
            {"spike": float(x), "norm": norm.value, "rank_aware": float(rank_aware_loss(x, norm, fw)),
             "optimal": float(optimal_loss_formal(x, norm, fw))}
            for x in grid for norm in Norm
        ]
        return ["spike", "norm", "rank_aware", "optimal"], rows
    if which == "regret":
        rows = []
        for x in grid:
            for norm in Norm:
                reg, imp = regret_and_improvement(x, norm, fw)
                rows.append({"spike": float(x), "norm": norm.value, "rank_aware": float(rank_aware_loss(x, norm, fw)),
                             "optimal": float(optimal_loss_formal(x, norm, fw)), "regret": float(reg),
                             "improvement": float(imp)})
        return ["spike", "norm", "rank_aware", "optimal", "regret", "improvement"], rows
    raise UsageError(f"unknown table {which!r}")


def cmd_tables(args) -> int:
    fw = _framework_arg(args.framework)
    grid = parse_grid(args.grid)
    columns, rows = _table_rows(args.which, fw, grid)
    if args.output:
        write_csv_rows(args.output, columns, rows)
    else:
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_float(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return EXIT_OK


# -- simulate ----------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg, doc = load_config(args.config)
    outdir = Path(args.outdir or doc.get("output", {}).get("dir", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(cfg, threads=args.threads)
    results = evaluate_assertions(report, cfg.assertions) if cfg.assertions else []

    body = report.to_dict()
    body["config"] = doc
    body["assertions"] = [{"label": r.assertion.label, "passed": r.passed, "value": r.value, "detail": r.detail}
                          for r in results]
    _write_json(outdir / "report.json", _finite(body))
    write_csv_rows(outdir / "replicates.csv", ["point", "spike", "replicate", "rule", "loss", "value"], report.losses)
    write_csv_rows(
        outdir / "spectra.csv",
        ["point", "spike", "replicate", "index", "eigenvalue", "left_c2", "right_c2"],
        report.spectra,
    )
    curves = [
        {"spike": r["spike"], "rule": r["rule"], "norm": r["loss"], "mean_loss": r["mean"],
         "stderr": r["stderr"], "theory_loss": r["theory"]}
        for r in report.loss_summary
    ]
    write_csv_rows(outdir / "curves.csv", ["spike", "rule", "norm", "mean_loss", "stderr", "theory_loss"], curves)

    for r in results:
        print(("PASS " if r.passed else "FAIL ") + r.detail)
    if args.check and not all(r.passed for r in results):
        return EXIT_ASSERT
    return EXIT_OK


def _finite(obj):
    """Replace non-finite floats (unbounded assertion limits) with strings for JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


# -- entry point ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectral-shrink", description="Eigenvalue shrinkage for spiked models.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("shrink", help="shrink a covariance matrix (or data with --from-data)")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--loss", default="F", choices=["F", "O", "N"])
    sp.add_argument("--rule", default="optimal", choices=["optimal", "agnostic", "threshold", "identity"])
    sp.add_argument("--framework", default="dzero", help="prop:<gamma>, dzero, dinf or auto")
    sp.add_argument("--gamma", type=float, help="aspect ratio p/n of the data")
    sp.add_argument("--n", type=int, help="sample size (sets gamma = p/n)")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--calibrate", action="store_true", help="estimate and divide out the noise level")
    sp.add_argument("--from-data", action="store_true", help="input is p x n data; use S = XX'/n")
    sp.add_argument("--header", action="store_true", help="skip the first line of the input")
    sp.add_argument("--epsilon", type=float, default=0.1, help="operator threshold exponent offset")
    sp.add_argument("--bulk-edge", action="store_true", help="operator rules threshold at the bulk edge")
    sp.add_argument("--threshold", type=float, help="explicit raw-scale hard threshold")
    sp.set_defaults(func=cmd_shrink)

    wp = sub.add_parser("wigner", help="denoise a spiked Wigner matrix")
    wp.add_argument("input")
    wp.add_argument("-o", "--output", required=True)
    wp.add_argument("--loss", default="F", choices=["F", "O", "N"])
    wp.add_argument("--rank-plus", type=int, default=1)
    wp.add_argument("--rank-minus", type=int, default=0)
    wp.add_argument("--header", action="store_true")
    wp.set_defaults(func=cmd_wigner)

    tp = sub.add_parser("tables", help="emit closed-form tables as CSV")
    tp.add_argument("--which", required=True, choices=["shrinkers", "losses", "regret", "thresholds"])
    tp.add_argument("--framework", default="dzero")
    tp.add_argument("--grid", default="0.5:4:8", help="start:stop:count or comma list of spikes")
    tp.add_argument("-o", "--output")
    tp.set_defaults(func=cmd_tables)

    mp = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    mp.add_argument("config")
    mp.add_argument("--outdir")
    mp.add_argument("--assert", dest="check", action="store_true", help="exit 4 if any assertion fails")
    mp.add_argument("--threads", type=int)
    mp.set_defaults(func=cmd_simulate)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, MatrixParseError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShrinkError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
