"""Exact likelihood of a threshold as a piecewise-constant function.

Moving a threshold across a sample value ``b`` switches only the samples with
``X_j == b`` from the upper to the lower regime, so the log-likelihood on
consecutive intervals ``(b_i, b_{i+1}]`` differs by a sum of one-sample terms.
The whole profile over a theta box therefore costs one direct evaluation plus
one sort.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ContractError, InputDomainError
from .model import DEFAULT_BURN_IN, TarModel, Trajectory, _mean, simulate_paths

MIN_REPLICATIONS = 100


def log_likelihood(model: TarModel, theta, traj: Trajectory) -> float:
    """Sum of ln f(X_{j+1} - m(X_j, theta)); the theta-free X_0 factor is dropped."""
    theta = model.check_theta(theta)
    x = traj.values
    resid = x[1:] - _mean(model, x[:-1], theta)
    return float(np.sum(model.noise.log_density(resid)))


@dataclass(frozen=True)
class LikelihoodProfile:
    """Log-likelihood on the intervals ``(alpha, b_1], (b_1, b_2], ..., (b_m, beta)``."""

    breakpoints: np.ndarray
    interval_loglik: np.ndarray
    theta_box: tuple[float, float]
    sample_size: int
    box_index: int = 0
    evaluations: int = 0

    @property
    def m(self) -> int:
        return self.breakpoints.size

    @property
    def degenerate(self) -> bool:
        return self.m == 0

    @property
    def edges(self) -> np.ndarray:
        a, b = self.theta_box
        return np.concatenate([[a], self.breakpoints, [b]])

    def interval_of(self, theta):
        return np.searchsorted(self.breakpoints, theta, side="left")

    def __call__(self, theta):
        a, b = self.theta_box
        t = np.asarray(theta, dtype=float)
        if np.any((t < a) | (t > b)):
            raise InputDomainError(f"theta outside the box [{a}, {b}]")
        out = self.interval_loglik[self.interval_of(t)]
        return out[()] if np.ndim(out) == 0 else out

    def to_csv(self, path):
        edges = self.edges
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interval_left", "interval_right", "log_likelihood"])
            for left, right, ll in zip(edges[:-1], edges[1:], self.interval_loglik):
                w.writerow([repr(float(left)), repr(float(right)), repr(float(ll))])


def crossing_terms(model: TarModel, box_index: int, x, y):
    """ln f(y - lower(x)) - ln f(y - upper(x)) for regimes either side of threshold ``box_index``."""
    lower, upper = model.regimes[box_index], model.regimes[box_index + 1]
    lf = model.noise.log_density
    return lf(y - lower(x)) - lf(y - upper(x))


def build_profile(model: TarModel, traj: Trajectory, box_index: int = 0, theta_ref=None) -> LikelihoodProfile:
    """Profile of the log-likelihood in threshold ``box_index``.

    The other thresholds are held at ``theta_ref`` (box midpoints by default);
    samples outside the box do not depend on this threshold.
    """
    if not 0 <= box_index < model.K:
        raise ContractError(f"box_index {box_index} out of range for K = {model.K}")
    a, b = model.theta_boxes[box_index]
    theta = model.box_midpoints() if theta_ref is None else model.check_theta(theta_ref).copy()

    x, y = traj.values[:-1], traj.values[1:]
    inside = (x > a) & (x < b)
    bx, by = x[inside], y[inside]
    order = np.argsort(bx, kind="stable")
    bx, by = bx[order], by[order]
    breakpoints, starts = np.unique(bx, return_index=True)

    theta[box_index] = 0.5 * (a + breakpoints[0]) if breakpoints.size else 0.5 * (a + b)
    base = log_likelihood(model, theta, traj)
    if breakpoints.size:
        terms = crossing_terms(model, box_index, bx, by)
        steps = np.add.reduceat(terms, starts)
        loglik = base + np.concatenate([[0.0], np.cumsum(steps)])
    else:
        loglik = np.array([base])
    return LikelihoodProfile(
        breakpoints, loglik, (a, b), traj.n, box_index, evaluations=traj.n + 2 * bx.size,
    )


def z_ratio(profile: LikelihoodProfile, theta0: float, u: float, n: int | None = None) -> float:
    """Normalised likelihood ratio L(theta0 + u/n) / L(theta0)."""
    n = profile.sample_size if n is None else n
    a, b = profile.theta_box
    t = theta0 + u / n
    if not (a <= theta0 <= b and a <= t <= b):
        raise InputDomainError(f"u = {u} outside U_n = [{n * (a - theta0)}, {n * (b - theta0)}]")
    if u == 0:
        return 1.0
    return math.exp(float(profile(t)) - float(profile(theta0)))


@dataclass(frozen=True)
class MartingaleDiagnostic:
    u: float
    n: int
    replications: int
    mean_W: float
    std_error: float


def martingale_statistic(model: TarModel, traj: Trajectory, theta0: float, u: float, box_index: int = 0) -> float:
    """W = exp(S1 / 2 + S2) over samples in the band [theta0, theta0 + u/n].

    S1 sums ln f(eps + delta(X_j)) / f(eps) and S2 sums G(delta(X_j)).
    """
    if traj.innovations is None:
        raise ContractError("martingale statistic needs stored innovations (simulated data only)")
    x = traj.values[:-1]
    band = (x >= theta0) & (x <= theta0 + u / traj.n)
    if not band.any():
        return 1.0
    d = np.asarray(model.delta(box_index, x[band]), dtype=float)
    s1 = float(np.sum(model.noise.log_jump(traj.innovations[band], d)))
    s2 = sum(model.noise.hellinger(float(v)).G for v in d)
    return math.exp(0.5 * s1 + s2)


def martingale_check(model: TarModel, theta0: float, u: float, n: int, replications: int, seed: int = 0,
                     burn_in: int = DEFAULT_BURN_IN, box_index: int = 0, chunk: int = 500) -> MartingaleDiagnostic:
    """Monte Carlo mean of W under theta0; it should be 1 within noise."""
    if replications < MIN_REPLICATIONS:
        raise ContractError(f"need at least {MIN_REPLICATIONS} replications, got {replications}")
    if not u > 0:
        raise ContractError("u must be positive")
    a, b = model.theta_boxes[box_index]
    if not (a < theta0 and theta0 + u / n < b):
        raise ContractError("band [theta0, theta0 + u/n] must lie inside the theta box")
    theta = model.box_midpoints()
    theta[box_index] = theta0
    ws = np.empty(replications)
    for start in range(0, replications, chunk):
        idx = range(start, min(start + chunk, replications))
        eps = np.stack([model.noise.sample(streams.derive_stream(seed, streams.MARTINGALE, n, i), burn_in + n)
                        for i in idx])
        values, innov = simulate_paths(model, theta, n, burn_in, eps)
        for row, i in enumerate(idx):
            ws[i] = martingale_statistic(model, Trajectory(values[row], innov[row]), theta0, u, box_index)
    return MartingaleDiagnostic(float(u), int(n), replications, float(ws.mean()),
                                float(ws.std(ddof=1) / math.sqrt(replications)))
