"""Command-line interface: ``hhnet {ingest,estimate,cv,bootstrap,simulate}``.

Every result file starts with a ``# key: value`` block (tool version, config
hash, seed). Exit status is 0 on success, 2 for bad input and 3 when a fit
or selection fails numerically.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .files import config_hash, read_observations, read_result, write_observations, write_result
from .independence import independence_mle, network_intervals, product_distribution
from .ingestion import REPORT_COLUMNS, IngestOptions, ingest
from .likelihood import PENALTIES, PenalizedObjectiveSpec, make_penalty
from .network import DYAD_LABELS, N_NETWORKS, index_to_vector
from .optimizer import NotConvergedError, OptimizationError, OptimizerOptions, fisher_standard_errors, maximize
from .selection import DEFAULT_B, DEFAULT_GRID, SelectionError, bootstrap, loo_cross_validate, parse_grid, select_lambda
from .simulation import (
    ADJACENCY_GRID,
    CSV_COLUMNS,
    INDEPENDENCE_GRID,
    PAPER_FREQUENCY,
    SCENARIOS,
    RespondentFrequency,
    StudyConfig,
    run_study,
)

log = logging.getLogger("hhnet")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DISPLAY_THRESHOLD = 0.02
ESTIMATE_COLUMNS = (
    ["network", *DYAD_LABELS]
    + [f"{m}{suffix}" for m in ("mle", "penalized", "independence") for suffix in ("", "_low", "_high")]
)


class InputError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _meta(args, command: str, **extra) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out_dir", "jobs", "verbose")}
    for key in ("observations", "contacts", "households", "p_true"):
        if config.get(key):
            config[key + "_sha256"] = _file_digest(config.pop(key))
    meta = {"tool": f"hhnet {__version__}", "command": command, "config_hash": config_hash(config), "seed": args.seed}
    meta.update(extra)
    return meta


def _options(args) -> OptimizerOptions:
    return OptimizerOptions(
        gtol=args.gtol, ftol=args.ftol, max_iter=args.max_iter, n_starts=args.n_starts, seed=args.seed, kkt_tol=args.kkt_tol
    )


def _out(args, name: str) -> Path:
    return Path(args.out_dir) / name


def _load(args):
    data = read_observations(args.observations)
    if len(data) < 2:
        raise InputError(f"{args.observations}: need at least two observations, found {len(data)}")
    return data


def _grid(args, default):
    return parse_grid(args.grid) if args.grid else tuple(default)


@dataclass(frozen=True)
class EstimateRow:
    network: int
    pattern: tuple[int, ...]
    mle: tuple[float, float, float]
    penalized: tuple[float, float, float]
    independence: tuple[float, float, float]

    def values(self) -> list:
        return [self.network, *self.pattern, *self.mle, *self.penalized, *self.independence]

    @property
    def displayed(self) -> bool:
        return max(self.mle[0], self.penalized[0], self.independence[0]) >= DISPLAY_THRESHOLD


def _normal_ci(p, se, level):
    z = stats.norm.ppf(0.5 + level / 2)
    if se is None:
        nan = np.full_like(p, np.nan)
        return nan, nan
    return np.clip(p - z * se, 0, 1), np.clip(p + z * se, 0, 1)


def estimate_rows(p_mle, mle_ci, p_pen, pen_ci, p_ind, ind_ci) -> list[EstimateRow]:
    """All 64 networks, sorted by dyad pattern with the complete network first."""
    rows = [
        EstimateRow(
            k,
            index_to_vector(k),
            (p_mle[k], mle_ci[0][k], mle_ci[1][k]),
            (p_pen[k], pen_ci[0][k], pen_ci[1][k]),
            (p_ind[k], ind_ci[0][k], ind_ci[1][k]),
        )
        for k in range(N_NETWORKS)
    ]
    return sorted(rows, key=lambda r: r.pattern, reverse=True)


def _cell(est) -> str:
    p, lo, hi = est
    if np.isnan(lo):
        return f"{p:.2f} (NA)"
    return f"{p:.2f} ({lo:.2f}, {hi:.2f})"


def render_table(rows, lam: float, level: float) -> str:
    """Text table of the networks with an estimate of at least 0.02 under some model."""
    head = [*DYAD_LABELS, "MLE", f"pen.MLE (lambda={lam:g})", "indep."]
    body = [[*map(str, r.pattern), _cell(r.mle), _cell(r.penalized), _cell(r.independence)] for r in rows if r.displayed]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
    lines.append(f"{int(level * 100)}% intervals: bootstrap (MLE), Fisher information (pen.MLE), conservative product (indep.)")
    lines.append(f"networks with all estimates below {DISPLAY_THRESHOLD} omitted")
    return "\n".join(lines) + "\n"


def cmd_ingest(args) -> int:
    obs, report = ingest(args.contacts, args.households, args.composition, IngestOptions(args.tolerance))
    if not obs:
        raise InputError("zero qualifying households")
    meta = _meta(args, "ingest", households=len(obs))
    write_observations(_out(args, "observations.csv"), obs, meta)
    write_result(
        _out(args, "exclusions.csv"),
        meta,
        REPORT_COLUMNS,
        ([r.respondent_id, r.reason, r.detail] for r in report.rows()),
    )
    print(f"{len(obs)} observations written; {len(report.excluded)} households excluded, {len(report.notes)} notes")
    return EXIT_OK


def _cv(args, data, penalty, opts):
    curve = loo_cross_validate(data, _grid(args, DEFAULT_GRID), penalty, opts, scale=args.scale, jobs=args.jobs)
    return curve, select_lambda(curve)


def cmd_cv(args) -> int:
    data = _load(args)
    penalty = make_penalty(args.penalty)
    curve, lam = _cv(args, data, penalty, _options(args))
    write_result(
        _out(args, "cv.csv"),
        _meta(args, "cv", selected_lambda=repr(lam), scale=curve.scale),
        ["lambda", "mean_heldout_score", "complete"],
        zip(curve.grid, curve.mean_heldout_loglik, curve.complete),
    )
    print(f"selected lambda: {lam:g}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    data = _load(args)
    opts = _options(args)
    dyads = independence_mle(data)
    p_ind = product_distribution(dyads)
    ind_ci = network_intervals(dyads, args.level).T
    penalty = make_penalty(args.penalty, data)
    lam = args.lam
    if lam is None:
        _, lam = _cv(args, data, make_penalty(args.penalty), opts)
    mle = maximize(PenalizedObjectiveSpec(data, 0.0, penalty), opts=opts)
    boot = bootstrap(data, args.bootstrap_B, 0.0, penalty, args.seed, opts, jobs=args.jobs)
    pen_spec = PenalizedObjectiveSpec(data, lam, penalty)
    pen = maximize(pen_spec, opts=opts)
    try:
        fisher = fisher_standard_errors(pen, pen_spec).standard_errors
    except NotConvergedError:
        raise NumericalError(f"penalized fit at lambda={lam:g} did not converge") from None
    if fisher is None:
        log.warning("observed information is singular at lambda=%g; no Fisher intervals", lam)
    rows = estimate_rows(
        mle.p_hat,
        _normal_ci(mle.p_hat, boot.standard_errors, args.level),
        pen.p_hat,
        _normal_ci(pen.p_hat, fisher, args.level),
        p_ind,
        ind_ci,
    )
    meta = _meta(args, "estimate", **{"lambda": repr(float(lam)), "level": args.level, "bootstrap_B": args.bootstrap_B})
    write_result(_out(args, "estimates.csv"), meta, ESTIMATE_COLUMNS, (r.values() for r in sorted(rows, key=lambda r: r.network)))
    table = render_table(rows, lam, args.level)
    _out(args, "estimate_table.txt").write_text("".join(f"# {k}: {v}\n" for k, v in meta.items()) + table)
    print(table, end="")
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    data = _load(args)
    opts = _options(args)
    penalty = make_penalty(args.penalty)
    full_pen = make_penalty(args.penalty, data) if args.lam > 0 else penalty
    fit = maximize(PenalizedObjectiveSpec(data, args.lam, full_pen), opts=opts)
    boot = bootstrap(data, args.bootstrap_B, args.lam, penalty, args.seed, opts, jobs=args.jobs)
    write_result(
        _out(args, "bootstrap.csv"),
        _meta(args, "bootstrap", **{"lambda": repr(float(args.lam)), "B": boot.B, "failures": boot.failures}),
        ["network", *DYAD_LABELS, "estimate", "standard_error"],
        ([k, *index_to_vector(k), fit.p_hat[k], boot.standard_errors[k]] for k in range(N_NETWORKS)),
    )
    print(f"{boot.B} resamples, {boot.failures} failed")
    return EXIT_OK


def _p_true(args) -> np.ndarray:
    if not args.p_true:
        return SCENARIOS[args.scenario]()
    _, rows = read_result(args.p_true)
    if len(rows) != N_NETWORKS:
        raise InputError(f"{args.p_true}: expected 64 rows, found {len(rows)}")
    column = args.p_true_column
    if column not in rows[0]:
        raise InputError(f"{args.p_true}: no column {column!r}")
    by_network = {int(r.get("network", i)): float(r[column]) for i, r in enumerate(rows)}
    if sorted(by_network) != list(range(N_NETWORKS)):
        raise InputError(f"{args.p_true}: network ids must be 0..63")
    p = np.array([by_network[k] for k in range(N_NETWORKS)])
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-6:
        raise InputError(f"{args.p_true}: probabilities must be nonnegative and sum to 1")
    return p / p.sum()


def cmd_simulate(args) -> int:
    freq = RespondentFrequency(tuple(int(x) for x in args.freq.split(",")))
    n = args.n if args.n is not None else freq.n
    default_grid = INDEPENDENCE_GRID if args.penalty == "independence" else ADJACENCY_GRID
    config = StudyConfig(_p_true(args), n, freq, args.samples, _grid(args, default_grid), make_penalty(args.penalty), args.seed)
    metrics = run_study(config, opts=_options(args), jobs=args.jobs)
    gap = np.abs(metrics.mse - metrics.mean_sq_bias - metrics.variance)
    if np.nanmax(gap, initial=0.0) > 1e-10:
        raise NumericalError("error decomposition does not add up")
    write_result(
        _out(args, "simulation.csv"),
        _meta(args, "simulate", failures=int(metrics.failures.sum())),
        CSV_COLUMNS,
        metrics.rows(),
    )
    print(f"{config.S} samples x {len(config.grid)} grid values; {int(metrics.failures.sum())} failed fits")
    return EXIT_OK


def _common(p: argparse.ArgumentParser, observations: bool = True) -> None:
    if observations:
        p.add_argument("observations", help="observation file")
    p.add_argument("--out-dir", default=".", help="directory for result files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--verbose", "-v", action="store_true")


def _fitting(p: argparse.ArgumentParser) -> None:
    p.add_argument("--penalty", choices=sorted(PENALTIES), default="independence")
    g = p.add_argument_group("optimizer tolerances")
    d = OptimizerOptions()
    g.add_argument("--gtol", type=float, default=d.gtol, help="gradient sup-norm tolerance")
    g.add_argument("--ftol", type=float, default=d.ftol, help="objective change tolerance")
    g.add_argument("--max-iter", type=int, default=d.max_iter)
    g.add_argument("--n-starts", type=int, default=d.n_starts)
    g.add_argument("--kkt-tol", type=float, default=d.kkt_tol)


def _level(text: str) -> float:
    x = float(text)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hhnet", description="Household contact network estimation")
    parser.add_argument("--version", action="version", version=f"hhnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an observation file from diary and roster files")
    p.add_argument("--contacts", required=True)
    p.add_argument("--households", required=True)
    p.add_argument("--composition", required=True, help="composition type 1..6")
    p.add_argument("--tolerance", type=int, default=0, help="age matching tolerance in years")
    _common(p, observations=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cv", help="leave-one-out cross-validation over a lambda grid")
    _common(p)
    _fitting(p)
    p.add_argument("--grid", help="start:stop:step or comma list (default 0:40:0.5)")
    p.add_argument("--scale", choices=("log", "raw"), default="log")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("estimate", help="MLE, penalized MLE and independence fits with intervals")
    _common(p)
    _fitting(p)
    p.add_argument("--lambda", dest="lam", type=float, help="smoothing weight; selected by CV when omitted")
    p.add_argument("--grid", help="CV grid when --lambda is omitted")
    p.add_argument("--scale", choices=("log", "raw"), default="log")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--bootstrap-B", type=int, default=DEFAULT_B)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap", help="bootstrap standard errors")
    _common(p)
    _fitting(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--bootstrap-B", type=int, default=DEFAULT_B)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", help="Monte Carlo error study over a lambda grid")
    _common(p, observations=False)
    _fitting(p)
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="dependent")
    p.add_argument("--p-true", help="result file with 64 probabilities (overrides --scenario)")
    p.add_argument("--p-true-column", default="penalized")
    p.add_argument("--n", type=int)
    p.add_argument("--freq", default=",".join(map(str, PAPER_FREQUENCY)), help="respondent counts C1,C2,A1,A2")
    p.add_argument("--samples", "-S", type=int, default=200)
    p.add_argument("--grid", help="start:stop:step or comma list")
    p.set_defaults(func=cmd_simulate)
    return parser


def _validate_paths(args) -> None:
    for key in ("observations", "contacts", "households", "p_true"):
        path = getattr(args, key, None)
        if path and not Path(path).is_file():
            raise InputError(f"no such file: {path}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not out.is_dir():
        raise InputError(f"not a directory: {out}")
    if getattr(args, "jobs", 1) < 1:
        raise InputError("--jobs must be at least 1")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate_paths(args)
        return args.func(args)
    except (OptimizationError, NotConvergedError, SelectionError, NumericalError) as exc:
        print(f"hhnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"hhnet: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
