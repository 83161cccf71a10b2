"""Experiment runs, parameter sweeps and the dual-vs-primal oracle check."""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bellman
from .errors import InvalidConfig
from .evaluator import cce_gap
from .game import RobustMarkovGame, random_game
from .invariants import check_invariants
from .io import load_game
from .learner import LearnerConfig, robust_q_ftrl

log = logging.getLogger(__name__)

RUN_COLUMNS = [
    "cell_id",
    "status",
    "K",
    "N",
    "c_alpha",
    "c_b",
    "delta",
    "sigma_min",
    "seed",
    "N_all",
    "samples",
    "gap_recursive",
    "gap_mc",
    "se_mc",
    "runtime_s",
    "optimism_ok",
    "regret_le_bonus_ok",
    "span_ok",
    "error",
]


def run_id(config: LearnerConfig, game_tag: str = "") -> str:
    blob = json.dumps({"game": game_tag, **config.to_dict()}, sort_keys=True)
    return hashlib.sha1(blob.encode()).hexdigest()[:12]


def run_cell(
    game: RobustMarkovGame,
    config: LearnerConfig,
    methods=("recursive",),
    mc_samples: int = 1000,
    cell_id: str = "",
    return_output: bool = False,
):
    """Learn, evaluate and (if archived) check invariants; returns a RunRecord row."""
    row = {c: "" for c in RUN_COLUMNS}
    row.update(config.to_dict())
    row.update(cell_id=cell_id, sigma_min=float(game.radii.min()), N_all=game.total_samples(config.K, config.N))
    start = time.perf_counter()
    out = robust_q_ftrl(game, config)
    row["samples"] = out.samples
    if "recursive" in methods:
        row["gap_recursive"] = cce_gap(game, out.mixture, "recursive").gap
    if "mc" in methods:
        rep = cce_gap(game, out.mixture, "mc", M=mc_samples, seed=config.seed)
        row["gap_mc"] = rep.gap
        row["se_mc"] = rep.overall_std_error
    if config.archive:
        inv = check_invariants(game, out)
        row.update(optimism_ok=inv.optimism_ok, regret_le_bonus_ok=inv.regret_le_bonus_ok, span_ok=inv.span_ok)
    row["runtime_s"] = round(time.perf_counter() - start, 4)
    row["status"] = "ok"
    return (row, out) if return_output else row


def append_rows(path, rows) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\r\n")
        if new:
            w.writeheader()
        for row in rows:
            w.writerow(row)


# --- sweeps -------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    game: RobustMarkovGame
    cells: list  # LearnerConfig per cell
    methods: tuple = ("recursive",)
    mc_samples: int = 1000
    out_dir: Path = field(default_factory=lambda: Path("results"))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(doc, base=path.parent)

    @classmethod
    def from_dict(cls, doc: dict, base=Path(".")) -> "ExperimentConfig":
        base = Path(base)
        src = doc.get("game")
        if isinstance(src, str):
            gpath = base / src
            if not gpath.exists():
                raise InvalidConfig(f"game file {gpath} does not exist")
            game = load_game(gpath)
        elif isinstance(src, dict):
            game = random_game(
                src["n"], src["H"], src["S"], src["actions"], src["radii"], src.get("seed", 0)
            )
        else:
            raise InvalidConfig("'game' must be a file path or a random-game spec")
        grid = doc.get("grid", {})
        if "pairs" in doc:
            kn = [tuple(p) for p in doc["pairs"]]
        else:
            kn = list(itertools.product(grid.get("K", []), grid.get("N", [])))
        seeds = doc.get("seeds", [0])
        c_alphas = grid.get("c_alpha", [24.0])
        c_bs = grid.get("c_b", [1.0])
        deltas = grid.get("delta", [0.1])
        if not kn or not seeds or not c_alphas or not c_bs or not deltas:
            raise InvalidConfig("sweep grid and seed list must be non-empty")
        archive = bool(doc.get("archive", True))
        cells = [
            LearnerConfig(K=int(K), N=int(N), c_alpha=ca, c_b=cb, delta=d, seed=int(s), archive=archive)
            for (K, N), ca, cb, d, s in itertools.product(kn, c_alphas, c_bs, deltas, seeds)
        ]
        for c in cells:
            c.validate()
        methods = tuple(doc.get("methods", ["recursive", "mc"]))
        return cls(
            game=game,
            cells=cells,
            methods=methods,
            mc_samples=int(doc.get("mc_samples", 1000)),
            out_dir=base / doc.get("out_dir", "results"),
        )


def _safe_cell(game, cfg, methods, mc_samples, cell_id):
    try:
        return run_cell(game, cfg, methods, mc_samples, cell_id)
    except Exception as exc:  # recorded per cell, the sweep continues
        row = {c: "" for c in RUN_COLUMNS}
        row.update(cfg.to_dict())
        row.update(cell_id=cell_id, status="failed", error=f"{type(exc).__name__}: {exc}")
        return row


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("RMGLAB_THREADS", "1")))
    except ValueError:
        return 1


def sweep(exp: ExperimentConfig, csv_path=None, workers: int | None = None) -> list:
    """Run every cell; rows are appended to ``runs.csv`` as cells complete."""
    csv_path = Path(csv_path) if csv_path else exp.out_dir / "runs.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    workers = workers or worker_count()
    jobs = [(f"cell{idx:04d}", cfg) for idx, cfg in enumerate(exp.cells)]
    rows = []
    if workers == 1:
        for cell_id, cfg in jobs:
            row = _safe_cell(exp.game, cfg, exp.methods, exp.mc_samples, cell_id)
            append_rows(csv_path, [row])
            rows.append(row)
            log.info("%s K=%s N=%s seed=%s status=%s", cell_id, cfg.K, cfg.N, cfg.seed, row["status"])
        return rows
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_safe_cell, exp.game, cfg, exp.methods, exp.mc_samples, cid) for cid, cfg in jobs]
        for fut in as_completed(futures):
            row = fut.result()
            append_rows(csv_path, [row])
            rows.append(row)
    return rows


# --- oracle check -----------------------------------------------------------------


def oracle_check(trials: int, S: int | None = None, seed: int = 0, ties: bool = False, scale: float = 3.0) -> dict:
    """Compare the dual value with the primal transport oracle on random triples.

    Every tenth trial uses ``sigma = 0``. With ``ties`` the values are drawn from
    three levels so that most entries coincide. ``S=None`` draws ``S`` in 2..16.
    """
    if trials < 1:
        raise InvalidConfig("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_zero = 0.0
    for t in range(trials):
        size = int(S) if S else int(rng.integers(2, 17))
        P = rng.dirichlet(np.ones(size))
        if ties:
            V = rng.integers(0, 3, size).astype(float) * scale / 2
        else:
            V = rng.uniform(0.0, scale, size)
        sigma = 0.0 if t % 10 == 0 else float(rng.uniform(0.0, 1.0))
        dev = abs(bellman.tv_support_value(P, V, sigma) - bellman.lp_inner_min_oracle(P, V, sigma))
        worst = max(worst, dev)
        if sigma == 0.0:
            worst_zero = max(worst_zero, dev)
    return {"trials": trials, "max_abs_deviation": worst, "max_abs_deviation_sigma0": worst_zero}
