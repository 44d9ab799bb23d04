"""Command-line interface: ``exmeas sample|certify|demo|verify``.

Exit codes: 0 success, 1 a verification suite failed, 2 config or usage
error, 3 resource cap hit while sampling, 4 not locally finite (or the
certification gate of ``verify`` failed), 5 inconclusive.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import harness
from .config import ConfigError, ModelConfig, load
from .core import Status, _json_float, window_mass
from .finiteness import certify
from .poisson import ResourceLimitError
from .rng import RngKey
from .sampler import truncation_error

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_CAP, EXIT_NOT_FINITE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4, 5
_STATUS_EXIT = {Status.LOCALLY_FINITE: EXIT_OK, Status.NOT_LOCALLY_FINITE: EXIT_NOT_FINITE,
                Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}
FORMAT = "exmeas-atoms v1"


def _fail(msg: str, code: int):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load(path: str) -> ModelConfig:
    try:
        return load(path)
    except ConfigError as e:
        _fail(str(e), EXIT_CONFIG)


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def _jsonable(obj):
    if isinstance(obj, float):
        return _json_float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Sample, certify and test exchangeable random measures on the
    quarter plane."""


@main.command("sample")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--window", "-s", "s", type=float, default=1.0, show_default=True, help="Window side s.")
@click.option("--mark-cap", "-T", type=float, default=None, help="Mark cap T (overrides the config).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True,
              help="Atom TSV path; the summary goes to <out>.json.")
def cmd_sample(config, s, mark_cap, seed, out):
    """Sample the measure restricted to [0, s]^2 and write its atoms."""
    cfg = _load(config)
    if not (s > 0 and math.isfinite(s)):
        _fail("window must be finite and positive", EXIT_CONFIG)
    if seed < 0:
        _fail("seed must be nonnegative", EXIT_CONFIG)
    try:
        sampler = cfg.sampler(mark_cap)
    except ValueError as e:
        _fail(str(e), EXIT_CONFIG)
    if hasattr(sampler, "workers"):
        sampler.workers = None
    T = sampler.tc.mark_cap if hasattr(sampler, "tc") else sampler.base.tc.mark_cap
    try:
        w = sampler.sample(s, RngKey(seed))
    except ResourceLimitError as e:
        _fail(str(e), EXIT_CAP)
    trunc = truncation_error(cfg.model, s, T)

    integral = w.weights.dtype.kind in "iu"
    lines = [f"# {FORMAT} window={_g17(s)} seed={seed} mark_cap={_g17(T)}\n"]
    lines += [f"{_g17(x)}\t{_g17(y)}\t{int(m) if integral else _g17(m)}\n"
              for x, y, m in zip(w.xs.tolist(), w.ys.tolist(), w.weights.tolist())]
    Path(out).write_text("".join(lines))
    summary = {
        "format": FORMAT, "config": Path(config).name, "mode": cfg.mode, "window": s, "seed": seed, "mark_cap": T,
        "n_atoms": w.n_atoms, "atomic_mass": w.atomic_mass, "total_mass": window_mass(w),
        "continuous": {"diagonal": w.diag_mass, "plane": w.plane_mass,
                       "lines": [{"coordinate": l.coordinate, "orientation": l.orientation, "mass": l.mass}
                                 for l in w.line_masses]},
        "parts": dict(sorted(w.part_masses.items())),
        "truncation_error": {"value": trunc.value, "error": trunc.error, "verdict": trunc.verdict.value,
                             "parts": {k: v.value for k, v in sorted(trunc.parts.items())}},
    }
    Path(str(out) + ".json").write_text(_dump(summary))
    click.echo(f"wrote {w.n_atoms} atoms to {out} (total mass {window_mass(w):.6g})")


def _print_verdict(verdict):
    rows = [("condition", "status", "estimate", "error", "witness")]
    for r in verdict.evidence:
        rows.append((r.condition, r.status.value, f"{r.estimate:.6g}", f"{r.error:.2g}", r.witness))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    for row in rows:
        click.echo("  ".join(c.ljust(wd) for c, wd in zip(row[:4], widths)) + "  " + row[4])
    for r in verdict.evidence:
        if r.details:
            click.echo(f"{r.condition}: " + ", ".join(f"{k}={v:.6g}" for k, v in r.details))
    click.echo(f"verdict: {verdict.status.value}")


@main.command("certify")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=None, help="One-dimensional tolerance (overrides the config).")
@click.option("--json", "as_json", is_flag=True, help="Print the evidence as JSON.")
def cmd_certify(config, tol, as_json):
    """Decide almost sure local finiteness of the configured model."""
    cfg = _load(config)
    try:
        cc = cfg.certify if tol is None else replace(cfg.certify, tol=tol)
    except ValueError as e:
        _fail(str(e), EXIT_CONFIG)
    verdict = certify(cfg.model, cc)
    if as_json:
        click.echo(_dump(verdict.to_dict()), nl=False)
    else:
        _print_verdict(verdict)
    sys.exit(_STATUS_EXIT[verdict.status])


def _floats(ctx, param, value):
    try:
        vals = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of numbers")
    if not vals or any(v < 0 or not math.isfinite(v) for v in vals):
        raise click.BadParameter("values must be finite and nonnegative")
    return vals


@main.command("demo")
@click.option("--T-list", "T_list", callback=_floats, default="10,20,40,80", show_default=True,
              help="Comma-separated mark caps.")
@click.option("--samples", "-N", type=click.IntRange(min=2), default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--finite", is_flag=True, help="Use g = ind(x,0,1)*ind(y,0,1) instead of the counter-example.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default="demo_growth.csv", show_default=True)
def cmd_demo(T_list, samples, seed, finite, csv_path):
    """Growth of the star mass with the mark cap for the counter-example."""
    g = harness.FINITE_G if finite else harness.COUNTEREXAMPLE_G
    res = harness.counterexample_demo(T_list, samples, RngKey(seed), g=g)
    click.echo(f"g = {g}")
    click.echo(res.table())
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["T", "mean_mass", "stderr"])
        for T, m, se in res.rows:
            wr.writerow([_g17(T), _g17(m), _g17(se)])


@main.command("verify")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--suite", type=click.Choice(["exchangeability", "independence", "campbell", "all"]),
              default="all", show_default=True)
@click.option("--samples", "-N", type=click.IntRange(min=2), default=2000, show_default=True)
@click.option("--alpha", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--swap-a", type=float, default=1.0, show_default=True, help="Half-width a of the interval swap.")
@click.option("--window", "-s", "s", type=float, default=1.0, show_default=True, help="Window for campbell.")
@click.option("--json", "as_json", is_flag=True, help="Print the reports as JSON.")
def cmd_verify(config, suite, samples, alpha, seed, swap_a, s, as_json):
    """Run statistical checks on sampled windows (after certification)."""
    cfg = _load(config)
    if not 0 < alpha < 1:
        _fail("alpha must lie in (0, 1)", EXIT_CONFIG)
    verdict = certify(cfg.model, cfg.certify)
    if verdict.status is not Status.LOCALLY_FINITE:
        _print_verdict(verdict)
        _fail(f"certification gate failed ({verdict.status.value}); not sampling", EXIT_NOT_FINITE)
    key = RngKey(seed)
    sampler = cfg.sampler()
    suites = ["exchangeability", "independence", "campbell"] if suite == "all" else [suite]
    reports = []
    try:
        for name in suites:
            if name == "exchangeability":
                reports.append(harness.test_exchangeability(sampler, swap_a, samples, key.child(1), alpha))
            elif name == "independence":
                reports.append(harness.test_block_independence(sampler, 1.0, 2.0, samples, key.child(2), alpha))
            else:
                reports.append(harness.campbell_check(sampler, s, cfg.truncation.mark_cap, samples, key.child(3),
                                                      alpha=alpha))
    except ResourceLimitError as e:
        _fail(str(e), EXIT_CAP)
    if as_json:
        click.echo(_dump([r.to_dict() for r in reports]), nl=False)
    else:
        for r in reports:
            click.echo(r.summary())
    sys.exit(EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED)


if __name__ == "__main__":
    main()
