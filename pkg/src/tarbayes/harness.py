"""Monte Carlo experiments comparing scaled estimation errors with the limit law.

Replications are processed in fixed blocks of ``CHUNK`` consecutive indices.
Each replication draws its innovations from a stream keyed by
``(master_seed, n, index)`` and the block layout never depends on the number of
workers, so every recorded number is independent of ``jobs``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, streams
from .conditions import check_conditions
from .errors import ContractError, TarError
from .estimators import Prior, estimate
from .invariant import intensity_at_threshold, invariant_density
from .likelihood import build_profile
from .limit import DEFAULT_TOL, LimitLaw, limit_draws, moment
from .model import DEFAULT_BURN_IN, TarModel, Trajectory, simulate_paths

log = logging.getLogger(__name__)

CHUNK = 100
LIMIT_CHUNK = 500
MOMENT_ORDERS = (1, 2)
REPLICATION_COLUMNS = ("n", "rep", "theta_bayes", "theta_ml", "scaled_err_bayes", "scaled_err_ml")
SUMMARY_FIELDS = (
    "n_list", "replications", "limit_draws", "theta_true", "box_index", "lambda", "delta0", "tol",
    "master_seed", "seeds", "ks_bayes", "ks_ml", "moments", "median_abs_err", "config", "versions",
)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ContractError("KS statistic needs two non-empty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


@dataclass
class ExperimentConfig:
    model: dict
    noise: dict = field(default_factory=dict)
    theta_true: list = field(default_factory=list)
    prior: dict = field(default_factory=dict)
    n_list: list = field(default_factory=lambda: [500, 1000, 2000])
    replications: int = 1000
    limit_draws: int = 10_000
    master_seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    tol: float = DEFAULT_TOL
    box_index: int = 0
    out: str | None = None

    def __post_init__(self):
        self.theta_true = [float(t) for t in np.atleast_1d(self.theta_true)]
        self.n_list = [int(n) for n in self.n_list]
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])) or self.n_list[0] < 1:
            raise ContractError("n_list must be a non-empty ascending list of positive integers")
        if self.replications < 1 or self.limit_draws < 1:
            raise ContractError("replications and limit_draws must be at least 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ContractError("master_seed must be an unsigned 64-bit integer")
        model = self.build_model()
        if len(self.theta_true) != model.K:
            raise ContractError(f"theta_true needs {model.K} components")
        for t, (a, b) in zip(self.theta_true, model.theta_boxes):
            if not a < t < b:
                raise ContractError(f"theta_true {t} must lie strictly inside its box ({a}, {b})")
        if not 0 <= self.box_index < model.K:
            raise ContractError("box_index out of range")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        cfg = dict(cfg)
        model = dict(cfg.pop("model"))
        kwargs = {k: cfg[k] for k in ("noise", "theta_true", "prior", "n_list", "replications", "limit_draws",
                                      "tol", "box_index", "out") if k in cfg}
        if "burn_in" in model:
            kwargs["burn_in"] = int(model.pop("burn_in"))
        if "burn_in" in cfg:
            kwargs["burn_in"] = int(cfg["burn_in"])
        seed = cfg.get("master_seed", cfg.get("seed"))
        if seed is not None:
            kwargs["master_seed"] = int(seed)
        return cls(model=model, **kwargs)

    def to_dict(self) -> dict:
        return {
            "model": self.model, "noise": self.noise, "theta_true": self.theta_true, "prior": self.prior,
            "n_list": self.n_list, "replications": self.replications, "limit_draws": self.limit_draws,
            "master_seed": self.master_seed, "burn_in": self.burn_in, "tol": self.tol,
            "box_index": self.box_index,
        }

    def build_model(self) -> TarModel:
        return TarModel.from_config(self.model, self.noise)

    def build_prior(self, model: TarModel) -> Prior:
        return Prior.from_config(self.prior, model.theta_boxes[self.box_index])


def load_config(path) -> dict:
    """Read a YAML (or JSON) configuration file."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ContractError(f"config {path} must hold a mapping")
    return data


@dataclass
class McSummary:
    config: ExperimentConfig
    lam: float
    delta0: float
    bayes: dict[int, np.ndarray]
    ml: dict[int, np.ndarray]
    limit_sample: np.ndarray
    ks_bayes: dict[int, float]
    ks_ml: dict[int, float]
    moments: list[dict]
    median_abs_err: dict[int, float]
    conditions: dict | None = None

    @property
    def theta0(self) -> float:
        return self.config.theta_true[self.config.box_index]

    def scaled_bayes(self, n: int) -> np.ndarray:
        return n * (self.bayes[n] - self.theta0)

    def scaled_ml(self, n: int) -> np.ndarray:
        return n * (self.ml[n] - self.theta0)

    def moment_row(self, n: int, p: int) -> dict:
        return next(r for r in self.moments if r["n"] == n and r["p"] == p)


def replication_stream(seed: int, n: int, rep: int) -> np.random.Generator:
    return streams.derive_stream(seed, streams.REPLICATION, n, rep)


def _replication_block(model: TarModel, prior: Prior, theta, box_index: int, n: int, burn_in: int,
                       seed: int, start: int, stop: int):
    eps = np.stack([model.noise.sample(replication_stream(seed, n, i), burn_in + n) for i in range(start, stop)])
    values, innov = simulate_paths(model, theta, n, burn_in, eps)
    bayes = np.empty(stop - start)
    ml = np.empty(stop - start)
    for row in range(stop - start):
        try:
            res = estimate(build_profile(model, Trajectory(values[row], innov[row]), box_index), prior)
        except TarError as exc:
            raise type(exc)(f"n={n}, replication={start + row}: {exc}") from exc
        bayes[row] = res.bayes
        ml[row] = res.ml if res.ml is not None else math.nan
    return start, bayes, ml


def _limit_block(law: LimitLaw, tol: float, seed: int, start: int, stop: int):
    return start, np.array([d.u_tilde for d in limit_draws(law, stop - start, tol, seed, start)])


def _run_blocks(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def run_experiment(config: ExperimentConfig, jobs: int = 1, force: bool = False) -> McSummary:
    model = config.build_model()
    prior = config.build_prior(model)
    theta = np.array(config.theta_true)
    k = config.box_index
    seed = int(config.master_seed)

    report = check_conditions(model, theta)
    if not report.ok and not force:
        failed = [i.name for i in report.items if i.status != "pass"]
        raise ContractError(f"model conditions not met ({', '.join(failed)}); rerun with force to override")

    density = invariant_density(model, theta)
    lam = intensity_at_threshold(density, float(theta[k]))
    law = LimitLaw(model.noise, float(model.delta(k, theta[k])), lam)
    log.info("lambda=%.6g delta0=%.6g", lam, law.delta0)

    tasks = [(law, config.tol, seed, s, min(s + LIMIT_CHUNK, config.limit_draws))
             for s in range(0, config.limit_draws, LIMIT_CHUNK)]
    limit_sample = np.concatenate([u for _, u in sorted(_run_blocks(_limit_block, tasks, jobs), key=lambda r: r[0])])

    bayes, ml = {}, {}
    for n in config.n_list:
        tasks = [(model, prior, theta, k, n, config.burn_in, seed, s, min(s + CHUNK, config.replications))
                 for s in range(0, config.replications, CHUNK)]
        blocks = sorted(_run_blocks(_replication_block, tasks, jobs), key=lambda r: r[0])
        bayes[n] = np.concatenate([b for _, b, _ in blocks])
        ml[n] = np.concatenate([m for _, _, m in blocks])
        log.info("n=%d done", n)

    theta0 = float(theta[k])
    ks_bayes = {n: ks_statistic(n * (bayes[n] - theta0), limit_sample) for n in config.n_list}
    ks_ml = {n: ks_statistic(n * (ml[n] - theta0), limit_sample) for n in config.n_list}
    moments = []
    for p in MOMENT_ORDERS:
        lim = moment(limit_sample, p)
        for n in config.n_list:
            emp = moment(n * (bayes[n] - theta0), p)
            moments.append({
                "n": n, "p": p, "empirical": emp.estimate, "empirical_se": emp.std_error,
                "limit": lim.estimate, "limit_se": lim.std_error, "ratio": emp.estimate / lim.estimate,
            })
    median_abs = {n: float(np.median(np.abs(bayes[n] - theta0))) for n in config.n_list}
    return McSummary(config, lam, law.delta0, bayes, ml, limit_sample, ks_bayes, ks_ml, moments, median_abs,
                     report.to_dict())


def _versions() -> dict:
    return {"tarbayes": __version__, "numpy": np.__version__, "python": platform.python_version()}


def summary_record(summary: McSummary) -> dict:
    cfg = summary.config
    return {
        "n_list": cfg.n_list,
        "replications": cfg.replications,
        "limit_draws": cfg.limit_draws,
        "theta_true": cfg.theta_true,
        "box_index": cfg.box_index,
        "lambda": summary.lam,
        "delta0": summary.delta0,
        "tol": cfg.tol,
        "master_seed": cfg.master_seed,
        "seeds": {
            "replication_stream": "SeedSequence(master_seed, spawn_key=(1, n, rep))",
            "limit_stream": "SeedSequence(master_seed, spawn_key=(2, draw))",
        },
        "ks_bayes": {str(n): v for n, v in summary.ks_bayes.items()},
        "ks_ml": {str(n): v for n, v in summary.ks_ml.items()},
        "moments": [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
                    for row in summary.moments],
        "median_abs_err": {str(n): v for n, v in summary.median_abs_err.items()},
        "config": cfg.to_dict(),
        "versions": _versions(),
    }


def emit(summary: McSummary, directory) -> dict[str, Path]:
    """Write replications.csv, limit_sample.txt and summary.json into ``directory``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "replications": out / "replications.csv",
            "limit_sample": out / "limit_sample.txt",
            "summary": out / "summary.json",
        }
        with open(paths["replications"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(REPLICATION_COLUMNS)
            for n in summary.config.n_list:
                sb, sm = summary.scaled_bayes(n), summary.scaled_ml(n)
                for i, (tb, tm) in enumerate(zip(summary.bayes[n], summary.ml[n])):
                    w.writerow([n, i, repr(float(tb)), repr(float(tm)), repr(float(sb[i])), repr(float(sm[i]))])
        write_limit_sample(paths["limit_sample"], summary.limit_sample)
        with open(paths["summary"], "w") as fh:
            json.dump(summary_record(summary), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or out}: {exc.strerror}") from exc
    return paths


def write_limit_sample(path, sample):
    with open(path, "w") as fh:
        for u in sample:
            fh.write(repr(float(u)) + "\n")


def read_replications(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for col in REPLICATION_COLUMNS:
        dtype = int if col in ("n", "rep") else float
        out[col] = np.array([dtype(r[col]) for r in rows])
    return out
