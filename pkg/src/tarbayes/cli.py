"""Command line interface: ``tarbayes <command> --config run.yaml ...``.

On failure every command exits non-zero and prints a JSON error record on stderr.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import streams
from .conditions import check_conditions
from .errors import ContractError, TarError
from .estimators import Prior, estimate, posterior_density
from .harness import ExperimentConfig, emit, load_config, run_experiment, write_limit_sample
from .invariant import intensity_at_threshold, invariant_density
from .likelihood import build_profile
from .limit import DEFAULT_TOL, LimitLaw, limit_sample
from .model import DEFAULT_BURN_IN, TarModel, Trajectory, simulate
from .noise import NoiseModel


def _fail(kind, message, code=1):
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def reporting_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TarError as exc:
            _fail(exc.kind, str(exc))
        except (OSError, KeyError, ValueError, TypeError) as exc:
            _fail(type(exc).__name__, str(exc))
    return wrapper


def common_options(fn):
    fn = click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed (u64).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="YAML/JSON configuration file.")(fn)
    return fn


def _config(config_path, seed) -> dict:
    cfg = load_config(config_path) if config_path else {}
    if seed is not None:
        cfg["master_seed"] = seed
    return cfg


def _model(cfg) -> TarModel:
    if "model" not in cfg:
        raise ContractError("config has no 'model' block")
    return TarModel.from_config(cfg["model"], cfg.get("noise"))


def _theta(cfg, model):
    if "theta_true" in cfg:
        return model.check_theta(cfg["theta_true"])
    return model.box_midpoints()


def _out_dir(out):
    path = Path(out) if out else Path(".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read_values(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = rows[0]
    try:
        float(header[0])
        return np.array([float(r[0]) for r in rows])
    except ValueError:
        col = header.index("x") if "x" in header else 0
        return np.array([float(r[col]) for r in rows[1:]])


def _trajectory(cfg, model, input_path, seed) -> Trajectory:
    if input_path:
        return Trajectory(_read_values(input_path))
    theta = _theta(cfg, model)
    n = int(cfg.get("n", 1000))
    burn_in = int(cfg.get("burn_in", cfg["model"].get("burn_in", DEFAULT_BURN_IN)))
    rng = streams.derive_stream(seed, streams.REPLICATION, n, 0)
    return simulate(model, theta, n, burn_in, rng, seed_record={"master_seed": seed, "replication": 0})


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Threshold estimation for nonlinear TAR(1) series."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command("simulate")
@common_options
@click.option("--n", "n", type=int, default=None, help="Recorded sample size (overrides config).")
@reporting_errors
def simulate_cmd(config_path, seed, out, jobs, n):
    """Simulate one trajectory and write trajectory.csv (j, x, eps)."""
    cfg = _config(config_path, seed)
    if n is not None:
        cfg["n"] = n
    model = _model(cfg)
    traj = _trajectory(cfg, model, None, int(cfg.get("master_seed", 0)))
    path = _out_dir(out) / "trajectory.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "x", "eps"])
        for j, x in enumerate(traj.values):
            eps = repr(float(traj.innovations[j - 1])) if j else ""
            w.writerow([j, repr(float(x)), eps])
    click.echo(str(path))


@main.command("profile")
@common_options
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV of observed values (column 'x' or first column).")
@click.option("--box", type=int, default=0, show_default=True, help="Threshold index.")
@reporting_errors
def profile_cmd(config_path, seed, out, jobs, input_path, box):
    """Write the piecewise-constant log-likelihood profile as profile.csv."""
    cfg = _config(config_path, seed)
    model = _model(cfg)
    traj = _trajectory(cfg, model, input_path, int(cfg.get("master_seed", 0)))
    path = _out_dir(out) / "profile.csv"
    build_profile(model, traj, box).to_csv(path)
    click.echo(str(path))


@main.command("estimate")
@common_options
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV of observed values (column 'x' or first column); simulated from config if omitted.")
@reporting_errors
def estimate_cmd(config_path, seed, out, jobs, input_path):
    """Bayes and ML threshold estimates; writes result.json and posterior.csv."""
    cfg = _config(config_path, seed)
    model = _model(cfg)
    master_seed = int(cfg.get("master_seed", 0))
    traj = _trajectory(cfg, model, input_path, master_seed)
    out_dir = _out_dir(out)
    records = []
    for k in range(model.K):
        prior_cfg = cfg.get("prior")
        if isinstance(prior_cfg, list):
            prior_cfg = prior_cfg[k]
        prior = Prior.from_config(prior_cfg, model.theta_boxes[k])
        profile = build_profile(model, traj, k)
        res = estimate(profile, prior)
        theta_true = None if input_path or traj.theta_true is None else traj.theta_true[k]
        records.append(res.to_record(n=traj.n, seed=None if input_path else master_seed, theta_true=theta_true))
        suffix = "" if model.K == 1 else f"_{k}"
        posterior_density(profile, prior).to_csv(out_dir / f"posterior{suffix}.csv")
    payload = records[0] if model.K == 1 else records
    with open(out_dir / "result.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    click.echo(json.dumps(payload))


@main.command("limit")
@common_options
@click.option("--draws", type=int, default=None, help="Number of u_tilde draws (overrides limit_draws).")
@click.option("--lambda", "lam", type=float, default=None, help="Poisson intensity (default: invariant density).")
@click.option("--delta0", type=float, default=None, help="Regime jump at theta_0 (default: from model).")
@reporting_errors
def limit_cmd(config_path, seed, out, jobs, draws, lam, delta0):
    """Sample u_tilde; writes limit_sample.txt and limit_meta.json."""
    cfg = _config(config_path, seed)
    master_seed = int(cfg.get("master_seed", 0))
    tol = float(cfg.get("tol", DEFAULT_TOL))
    draws = int(draws if draws is not None else cfg.get("limit_draws", 10_000))
    box = int(cfg.get("box_index", 0))
    if lam is None or delta0 is None:
        model = _model(cfg)
        theta = _theta(cfg, model)
        if lam is None:
            lam = intensity_at_threshold(invariant_density(model, theta), float(theta[box]))
        if delta0 is None:
            delta0 = float(model.delta(box, theta[box]))
        noise = model.noise
    else:
        noise = NoiseModel.from_config(cfg.get("noise", {}))
    law = LimitLaw(noise, delta0, lam)
    sample = limit_sample(law, draws, tol, master_seed)
    out_dir = _out_dir(out)
    write_limit_sample(out_dir / "limit_sample.txt", sample)
    meta = {"lambda": lam, "delta0": delta0, "tol": tol, "draws": draws, "seed": master_seed}
    with open(out_dir / "limit_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    click.echo(json.dumps(meta))


@main.command("check")
@common_options
@reporting_errors
def check_cmd(config_path, seed, out, jobs):
    """Print the numerical condition report as JSON."""
    cfg = _config(config_path, seed)
    model = _model(cfg)
    report = check_conditions(model, _theta(cfg, model))
    text = json.dumps(report.to_dict(), indent=2)
    if out:
        (_out_dir(out) / "conditions.json").write_text(text + "\n")
    click.echo(text)


@main.command("mc")
@common_options
@click.option("--force", is_flag=True, help="Run even if condition checks do not all pass.")
@reporting_errors
def mc_cmd(config_path, seed, out, jobs, force):
    """Full Monte Carlo experiment; writes replications.csv, limit_sample.txt, summary.json."""
    cfg = _config(config_path, seed)
    config = ExperimentConfig.from_dict(cfg)
    summary = run_experiment(config, jobs=jobs, force=force)
    paths = emit(summary, out or config.out or ".")
    click.echo(json.dumps({k: str(v) for k, v in paths.items()}))


if __name__ == "__main__":
    main()
