"""Reproducible experiment runner.

Usage::

    matmart <command> --config experiment.cfg [--seed N] [--workers N] [--out PATH]

Commands: ``bound``, ``simulate``, ``tail``, ``union-tail``, ``lemmas``,
``check-condition``, ``key-step``.  The command on the command line must
match ``experiment.command`` in the config (the config is the source of
truth; the positional argument guards against running the wrong file).

One CSV row is written per grid point with the fixed column set

    command,d,n,x,y,c,t,trials,hits,p_hat,se,bound_product,bound_exp,seed,wall_ms

and a human-readable PASS/FAIL summary line per row goes to stdout.  Exit
status is 0 iff every acceptance comparison passed.  All numeric cells are
written with shortest round-trip ``repr`` (exact to 17 significant digits);
identical (config, seed) produce byte-identical CSV for any worker count,
except the wall_ms column.
"""

import argparse
import csv
import hashlib
import io
import sys
import time

from . import __version__
from ._backend import active_backend
from .bounds import generic_exponential_bound, martingale_matrix_bound, optimal_t
from .config import COMMANDS, ExperimentConfig, parse_config
from .errors import ConfigError, MatmartError
from .simulate import check_path_invariants, generate_path
from .verify import (
    key_step_check,
    lemma_lieb_concavity,
    lemma_lieb_expectation,
    lemma_log_monotone,
    lemma_trace_monotone,
    mc_tail_experiment,
    mc_union_tail,
)

CSV_COLUMNS = ("command", "d", "n", "x", "y", "c", "t", "trials", "hits",
               "p_hat", "se", "bound_product", "bound_exp", "seed", "wall_ms")

LEMMA_ORDER = ("trace_monotone", "lieb_concavity", "lieb_expectation", "log_monotone")

_LEMMA_FUNCS = {
    "trace_monotone": lemma_trace_monotone,
    "lieb_concavity": lemma_lieb_concavity,
    "lieb_expectation": lemma_lieb_expectation,
    "log_monotone": lemma_log_monotone,
}


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _Row:
    """One output row plus its pass/fail verdict (None = informational)."""

    def __init__(self, command, seed, passed, note, **cells):
        self.cells = {col: None for col in CSV_COLUMNS}
        self.cells["command"] = command
        self.cells["seed"] = seed
        self.cells.update(cells)
        self.passed = passed
        self.note = note

    def summary(self):
        verdict = "INFO" if self.passed is None else ("PASS" if self.passed else "FAIL")
        return f"{verdict} {self.cells['command']}: {self.note}"


def _run_bound(config):
    rows = []
    for params in config.grid_points():
        t0 = time.perf_counter()
        report = martingale_matrix_bound(params)
        generic = generic_exponential_bound(params.x, params.y, params.c,
                                            params.n, params.d, params.t)
        chain_ok = report.bound_product_form <= report.bound_exp_form * (1 + 1e-12)
        if params.t == optimal_t(params.x, params.y, params.c):
            ident_ok = abs(generic - report.bound_product_form) <= 1e-12 * report.bound_product_form
        else:
            ident_ok = generic >= report.bound_product_form * (1 - 1e-12)
        passed = chain_ok and ident_ok
        rows.append(_Row(
            "bound", config.seed, passed,
            f"x={params.x} y={params.y} product={report.bound_product_form:.6g} "
            f"exp={report.bound_exp_form:.6g}",
            d=params.d, n=params.n, x=params.x, y=params.y, c=params.c,
            t=params.t, bound_product=report.bound_product_form,
            bound_exp=report.bound_exp_form,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        ))
    return rows


def _run_simulate(config):
    spec = config.generator
    t0 = time.perf_counter()
    violations = 0
    for i in range(config.trials):
        path = generate_path(spec, config.seed, trial=i)
        violations += len(check_path_invariants(path))
    wall = (time.perf_counter() - t0) * 1e3
    p = violations / config.trials
    return [_Row(
        "simulate", config.seed, violations == 0,
        f"{config.trials} paths, {violations} invariant violations",
        d=spec.dim, n=spec.horizon, trials=config.trials, hits=violations,
        p_hat=p, wall_ms=wall,
    )]


def _run_tail(config, union):
    spec = config.generator
    fn = mc_union_tail if union else mc_tail_experiment
    name = "union-tail" if union else "tail"
    rows = []
    for params in config.grid_points():
        t0 = time.perf_counter()
        est = fn(spec, params, config.trials, config.seed, workers=config.workers)
        wall = (time.perf_counter() - t0) * 1e3
        if union:
            passed = None
            note = (f"x={params.x} y={params.y} p_hat={est.p_hat:.6g} "
                    f"(per-level bounds: product={est.bound_product:.6g}, "
                    f"exp={est.bound_exp:.6g}; reported for inspection)")
        else:
            bound = est.comparison_bound()
            passed = est.p_hat <= bound + 3.0 * est.se
            note = (f"x={params.x} y={params.y} p_hat={est.p_hat:.6g} "
                    f"<= bound {bound:.6g} + 3se {3 * est.se:.2g}")
        rows.append(_Row(
            name, config.seed, passed, note,
            d=params.d, n=params.n, x=params.x, y=params.y, c=params.c,
            t=params.t, trials=est.trials, hits=est.hits, p_hat=est.p_hat,
            se=est.se, bound_product=est.bound_product, bound_exp=est.bound_exp,
            wall_ms=wall,
        ))
    return rows


def _run_lemmas(config):
    rows = []
    for i, lemma_id in enumerate(LEMMA_ORDER):
        t0 = time.perf_counter()
        report = _LEMMA_FUNCS[lemma_id](config.trials, config.d, config.seed + i)
        wall = (time.perf_counter() - t0) * 1e3
        rows.append(_Row(
            "lemmas", config.seed + i, report.passed,
            f"{lemma_id}: {report.violations} violations over {report.checks} "
            f"checks, worst slack {report.worst_slack:.3e}",
            d=config.d, trials=config.trials, hits=report.violations,
            p_hat=report.worst_slack, wall_ms=wall,
        ))
    return rows


def _run_check_condition(config):
    from .simulate import check_bernstein_condition

    t0 = time.perf_counter()
    report = check_bernstein_condition(config.generator, config.c, config.p_max)
    wall = (time.perf_counter() - t0) * 1e3
    return [_Row(
        "check-condition", config.seed, report.passed,
        f"c={config.c} p_max={config.p_max}: {len(report.violations)} violations, "
        f"worst slack {report.worst_slack:.3e}",
        d=config.generator.dim, n=config.generator.horizon, c=config.c,
        hits=len(report.violations), p_hat=report.worst_slack, wall_ms=wall,
    )]


def _run_key_step(config):
    rows = []
    for tc in config.tc_values:
        t = tc / config.c
        t0 = time.perf_counter()
        report = key_step_check(config.trials, config.generator, t, config.c,
                                p_max=config.p_max)
        wall = (time.perf_counter() - t0) * 1e3
        rows.append(_Row(
            "key-step", config.seed, report.passed,
            f"tc={tc}: {report.violations} violations over {report.checks} checks",
            d=config.generator.dim, n=config.generator.horizon, c=config.c, t=t,
            trials=config.trials, hits=report.violations,
            p_hat=report.worst_slack, wall_ms=wall,
        ))
    return rows


_RUNNERS = {
    "bound": _run_bound,
    "simulate": _run_simulate,
    "tail": lambda cfg: _run_tail(cfg, union=False),
    "union-tail": lambda cfg: _run_tail(cfg, union=True),
    "lemmas": _run_lemmas,
    "check-condition": _run_check_condition,
    "key-step": _run_key_step,
}


def render_csv(rows, config_digest, seed):
    """The CSV artifact as text: metadata comments, header, data rows."""
    out = io.StringIO()
    out.write(f"# matmart {__version__} experiment output\n")
    out.write(f"# backend: {active_backend()}\n")
    out.write(f"# config-digest: sha256:{config_digest}\n")
    out.write(f"# seed: {seed}\n")
    out.write("# note: for lemmas/check-condition/key-step rows the hits and\n")
    out.write("# p_hat columns carry the violation count and worst slack;\n")
    out.write("# lemmas rows appear in the order "
              + ", ".join(LEMMA_ORDER) + ".\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row.cells[col]) for col in CSV_COLUMNS])
    return out.getvalue()


def run(config: ExperimentConfig, config_text: str = "", out_stream=None):
    """Execute one experiment; returns (exit_status, rows).

    Writes the CSV to ``config.output_path`` when set, prints one summary
    line per row, and returns 0 iff every acceptance comparison passed.
    """
    rows = _RUNNERS[config.command](config)
    digest = hashlib.sha256(config_text.encode()).hexdigest()
    artifact = render_csv(rows, digest, config.seed)
    stream = out_stream if out_stream is not None else sys.stdout
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(artifact)
    for row in rows:
        print(row.summary(), file=stream)
    failed = sum(1 for row in rows if row.passed is False)
    checked = sum(1 for row in rows if row.passed is not None)
    print(f"{config.command}: {checked - failed}/{checked} comparisons passed"
          + (f", CSV -> {config.output_path}" if config.output_path else ""),
          file=stream)
    return (0 if failed == 0 else 1), rows


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="matmart",
        description="Matrix-martingale tail bound experiments",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="override worker count (results are identical "
                             "for any value)")
    parser.add_argument("--out", default=None, help="override CSV output path")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        config = parse_config(text)
    except ConfigError as exc:
        print("error: invalid config:", file=sys.stderr)
        for problem in exc.errors:
            print(f"  - {problem}", file=sys.stderr)
        return 2

    if config.command != args.command:
        print(f"error: config declares command {config.command!r} but "
              f"{args.command!r} was requested", file=sys.stderr)
        return 2

    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.out is not None:
        updates["output_path"] = args.out
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)

    try:
        status, _ = run(config, config_text=text)
    except MatmartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
