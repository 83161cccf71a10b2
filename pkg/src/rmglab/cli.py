"""Command-line interface: ``rmglab learn | eval | sweep | oracle-check | gen-game | bench``."""
from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path

import click

from . import __version__, kernels
from .errors import RMGError
from .evaluator import MIN_CI_SAMPLES, cce_gap
from .experiments import ExperimentConfig, append_rows, oracle_check, run_cell, run_id, sweep
from .game import random_game
from .io import archive_to_dict, dumps_mixture, load_game, load_mixture, save_game
from .learner import DEFAULT_SAMPLE_BUDGET, LearnerConfig


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(",")]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers")


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(x) for x in value.split(",")]
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers")


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Robust Markov game lab: learn robust CCEs and evaluate their gaps."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.option("--game", "game_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--K", "K", required=True, type=click.IntRange(min=1))
@click.option("--N", "N", required=True, type=click.IntRange(min=1))
@click.option("--c-alpha", default=24.0, show_default=True, type=float)
@click.option("--c-b", default=1.0, show_default=True, type=float)
@click.option("--delta", default=0.1, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--archive", is_flag=True, help="Keep per-round models and run the invariant checks.")
@click.option("--mc-samples", type=int, default=None, help="Also report the literal (Monte-Carlo) gap.")
@click.option("--force", is_flag=True, help=f"Allow runs above {DEFAULT_SAMPLE_BUDGET:.0e} samples.")
def learn(game_path, K, N, c_alpha, c_b, delta, seed, out_dir, archive, mc_samples, force):
    """Run Robust-Q-FTRL on a game file and write the learned mixture."""
    if mc_samples is not None and mc_samples < MIN_CI_SAMPLES:
        raise click.BadParameter(f"must be at least {MIN_CI_SAMPLES}", param_hint="--mc-samples")
    try:
        game = load_game(game_path)
        config = LearnerConfig(
            K=K, N=N, c_alpha=c_alpha, c_b=c_b, delta=delta, seed=seed, archive=archive,
            max_samples=sys.maxsize if force else DEFAULT_SAMPLE_BUDGET,
        )
        config.validate()
        methods = ("recursive", "mc") if mc_samples else ("recursive",)
        rid = run_id(config, Path(game_path).name)
        started = time.perf_counter()
        row, out = run_cell(game, config, methods, mc_samples or 0, cell_id=rid, return_output=True)
        wall = time.perf_counter() - started
    except RMGError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "mixture.json").write_text(dumps_mixture(out.mixture), encoding="utf-8")
    manifest = {
        "run_id": rid,
        "game": str(game_path),
        "config": config.to_dict(),
        "N_all": game.total_samples(K, N),
        "samples_consumed": out.samples,
        "wall_time_s": wall,
        "backend": kernels.BACKEND,
        "version": __version__,
        "v_hat_step0": out.v_hat[:, 0].tolist(),
        "gap_recursive": row["gap_recursive"],
    }
    if mc_samples:
        manifest.update(gap_mc=row["gap_mc"], se_mc=row["se_mc"])
    if archive:
        manifest["invariants"] = {k: row[k] for k in ("optimism_ok", "regret_le_bonus_ok", "span_ok")}
        (out_path / "archive.json").write_text(json.dumps(archive_to_dict(out)), encoding="utf-8")
    (out_path / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    append_rows(out_path / "runs.csv", [row])
    click.echo(f"run {rid}: gap_recursive={row['gap_recursive']:.6g} samples={out.samples} -> {out_path}")


@main.command(name="eval")
@click.option("--game", "game_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mixture", "mixture_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["recursive", "mc", "both"]), default="recursive", show_default=True)
@click.option("--mc-samples", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def eval_cmd(game_path, mixture_path, method, mc_samples, seed, out_dir):
    """Compute the robust CCE gap of a mixture (or product policy) file."""
    if method in ("mc", "both") and mc_samples < MIN_CI_SAMPLES:
        raise click.BadParameter(f"must be at least {MIN_CI_SAMPLES}", param_hint="--mc-samples")
    try:
        game = load_game(game_path)
        mixture = load_mixture(mixture_path, game)
        methods = ["recursive", "mc"] if method == "both" else [method]
        reports = [cce_gap(game, mixture, m, M=mc_samples, seed=seed) for m in methods]
    except RMGError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rid = Path(mixture_path).stem
    for rep in reports:
        rep.run_id = rid
    doc = {rep.method: rep.to_dict() for rep in reports}
    text = reports[0].to_csv() + "".join(r.to_csv().split("\r\n", 1)[1] for r in reports[1:])
    if out_dir:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "gap.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
        (out_path / "gap.csv").write_text(text, encoding="utf-8", newline="")
    click.echo(json.dumps(doc, indent=2))


@main.command(name="sweep")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "csv_path", type=click.Path(dir_okay=False), default=None, help="CSV path (default <out_dir>/runs.csv).")
def sweep_cmd(config_path, csv_path):
    """Run the (K, N, c_alpha, c_b, delta) x seeds grid of a JSON config file."""
    try:
        exp = ExperimentConfig.from_file(config_path)
    except (RMGError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rows = sweep(exp, csv_path)
    failed = sum(r["status"] != "ok" for r in rows)
    click.echo(f"{len(rows)} cells, {failed} failed -> {csv_path or exp.out_dir / 'runs.csv'}")


@main.command(name="oracle-check")
@click.option("--trials", type=click.IntRange(min=1), default=10000, show_default=True)
@click.option("--S", "S", type=click.IntRange(min=1), default=None, help="State count (default: random in 2..16).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ties", is_flag=True, help="Draw values from three levels to stress tie handling.")
def oracle_check_cmd(trials, S, seed, ties):
    """Cross-check the dual TV value against the primal oracle."""
    res = oracle_check(trials, S, seed, ties)
    click.echo(
        f"trials={res['trials']} max_abs_deviation={res['max_abs_deviation']:.3e} "
        f"sigma0_max_abs_deviation={res['max_abs_deviation_sigma0']:.3e}"
    )
    sys.exit(0 if res["max_abs_deviation"] <= 1e-9 else 1)


@main.command(name="gen-game")
@click.option("--n", "n", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--H", "H", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--S", "S", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--actions", callback=_int_list, default="2,2", show_default=True)
@click.option("--radii", callback=_float_list, default="0.3,0.3", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def gen_game(n, H, S, actions, radii, seed, out_path):
    """Write a random game (Dirichlet(1) kernels, uniform rewards)."""
    try:
        game = random_game(n, H, S, actions, radii, seed)
    except RMGError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    save_game(game, out_path)
    click.echo(f"wrote {game!r} -> {out_path}")


@main.command()
@click.option("--repeat", type=int, default=5, show_default=True)
def bench(repeat):
    """Time the compiled and numpy kernels against each other."""
    from .bench import run_benchmarks

    for line in run_benchmarks(repeat):
        click.echo(line)


if __name__ == "__main__":
    main()
