"""Bayes (posterior mean) and maximum-likelihood threshold estimates.

The likelihood is constant on each profile interval, so the posterior is a
mixture of the prior restricted to those intervals and every integral reduces
to per-interval prior moments.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError
from .likelihood import LikelihoodProfile, build_profile
from .model import TarModel, Trajectory


@dataclass(frozen=True)
class Prior:
    """Uniform or piecewise-linear (tabulated) prior density on ``support``."""

    support: tuple[float, float]
    kind: str = "uniform"
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        a, b = map(float, self.support)
        object.__setattr__(self, "support", (a, b))
        if not a < b:
            raise ContractError("prior support needs alpha < beta")
        if self.kind == "uniform":
            return
        if self.kind != "tabulated":
            raise ContractError(f"unknown prior kind {self.kind!r}")
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ContractError("tabulated prior needs matching increasing grid and values")
        if grid[0] > a or grid[-1] < b:
            raise ContractError("tabulated prior grid must cover the support")
        if np.any(vals <= 0):
            raise ContractError("tabulated prior values must be positive")
        # restrict to the support so the trapezoid rule integrates the interpolant exactly
        inner = (grid > a) & (grid < b)
        knots = np.concatenate([[a], grid[inner], [b]])
        dens = np.interp(knots, grid, vals)
        dens = dens / np.trapezoid(dens, knots)
        object.__setattr__(self, "grid", knots)
        object.__setattr__(self, "values", dens)

    @classmethod
    def uniform(cls, support) -> "Prior":
        return cls(tuple(support))

    @classmethod
    def from_config(cls, cfg: dict | None, support) -> "Prior":
        cfg = cfg or {}
        if cfg.get("kind", "uniform") == "uniform":
            return cls(tuple(support))
        return cls(tuple(support), "tabulated", cfg["grid"], cfg["values"])

    def pdf(self, theta):
        a, b = self.support
        if self.kind == "uniform":
            return np.where((np.asarray(theta) >= a) & (np.asarray(theta) <= b), 1.0 / (b - a), 0.0)
        return np.interp(theta, self.grid, self.values, left=0.0, right=0.0)

    def mean(self) -> float:
        a, b = self.support
        if self.kind == "uniform":
            return 0.5 * (a + b)
        _, first = self.interval_moments(np.array([a, b]))
        return float(first[0])

    def interval_moments(self, edges: np.ndarray):
        """Prior mass B_i and first moment A_i of each interval ``[edges[i], edges[i+1]]``."""
        left, right = edges[:-1], edges[1:]
        if self.kind == "uniform":
            a, b = self.support
            width = b - a
            return (right - left) / width, (right - left) * (right + left) / (2.0 * width)
        # the density is linear between knots, so Simpson's rule is exact on every piece
        pts = np.union1d(edges, self.grid[(self.grid > edges[0]) & (self.grid < edges[-1])])
        lo, hi = pts[:-1], pts[1:]
        mid = 0.5 * (lo + hi)
        plo, pmid, phi = self.pdf(lo), self.pdf(mid), self.pdf(hi)
        w = (hi - lo) / 6.0
        mass = w * (plo + 4.0 * pmid + phi)
        first = w * (lo * plo + 4.0 * mid * pmid + hi * phi)
        starts = np.searchsorted(pts, left)
        return np.add.reduceat(mass, starts), np.add.reduceat(first, starts)


@dataclass
class EstimationResult:
    bayes: float
    ml: float | None
    ml_interval: tuple[float, float] | None
    posterior_log_masses: np.ndarray
    normalizer: float
    degenerate: bool = False
    box_index: int = 0
    extra: dict = field(default_factory=dict)

    def to_record(self, n=None, seed=None, theta_true=None) -> dict:
        rec = {
            "bayes": self.bayes,
            "ml": self.ml,
            "ml_interval": list(self.ml_interval) if self.ml_interval else None,
            "n": n,
            "seed": seed,
        }
        if theta_true is not None:
            rec["theta_true"] = theta_true
        if self.degenerate:
            rec["degenerate"] = True
        return rec


def _check_support(profile, prior):
    if not np.allclose(profile.theta_box, prior.support, rtol=0, atol=0):
        raise ContractError(f"prior support {prior.support} differs from profile box {profile.theta_box}")


def _posterior(profile: LikelihoodProfile, prior: Prior):
    _check_support(profile, prior)
    mass, first = prior.interval_moments(profile.edges)
    with np.errstate(divide="ignore"):
        log_w = profile.interval_loglik + np.log(mass)
    normalizer = float(logsumexp(log_w))
    return mass, first, log_w - normalizer, normalizer


def bayes_estimate(profile: LikelihoodProfile, prior: Prior | None = None) -> EstimationResult:
    """Posterior mean of the threshold under ``prior`` (uniform on the box by default)."""
    prior = prior or Prior.uniform(profile.theta_box)
    if profile.degenerate:
        return EstimationResult(prior.mean(), None, None, np.zeros(1), float(profile.interval_loglik[0]),
                                degenerate=True, box_index=profile.box_index)
    mass, first, log_post, normalizer = _posterior(profile, prior)
    # sum_i A_i L_i / sum_i B_i L_i with the posterior weights B_i L_i / Z already normalised
    post = np.exp(log_post)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond_mean = np.where(mass > 0, first / mass, 0.0)
    a, b = profile.theta_box
    bayes = float(np.clip(np.dot(post, cond_mean) / post.sum(), a, b))
    return EstimationResult(bayes, None, None, log_post, normalizer, box_index=profile.box_index)


def ml_estimate(profile: LikelihoodProfile) -> EstimationResult:
    """Leftmost interval of maximal likelihood and its midpoint."""
    if profile.degenerate:
        raise ContractError("ML estimate undefined for a profile without breakpoints")
    i = int(np.argmax(profile.interval_loglik))
    edges = profile.edges
    left, right = float(edges[i]), float(edges[i + 1])
    return EstimationResult(math.nan, 0.5 * (left + right), (left, right), np.empty(0), math.nan,
                            box_index=profile.box_index)


def estimate(profile: LikelihoodProfile, prior: Prior | None = None) -> EstimationResult:
    """Bayes and (if the profile has breakpoints) ML estimates together."""
    res = bayes_estimate(profile, prior)
    if not profile.degenerate:
        ml = ml_estimate(profile)
        res.ml, res.ml_interval = ml.ml, ml.ml_interval
    return res


@dataclass(frozen=True)
class PosteriorDensity:
    """Posterior as a per-interval export: interval-average density and exact moments."""

    edges: np.ndarray
    density: np.ndarray
    masses: np.ndarray
    first_moments: np.ndarray

    def mean(self) -> float:
        return float(self.first_moments.sum())

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interval_left", "interval_right", "density"])
            for left, right, d in zip(self.edges[:-1], self.edges[1:], self.density):
                w.writerow([repr(float(left)), repr(float(right)), repr(float(d))])


def posterior_density(profile: LikelihoodProfile, prior: Prior | None = None) -> PosteriorDensity:
    prior = prior or Prior.uniform(profile.theta_box)
    mass, first, log_post, _ = _posterior(profile, prior)
    post = np.exp(log_post)
    post /= post.sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(mass > 0, post / mass, 0.0)
    edges = profile.edges
    return PosteriorDensity(edges, post / np.diff(edges), post, first * scale)


def multi_threshold_estimate(model: TarModel, traj: Trajectory, priors=None) -> list[EstimationResult]:
    """Coordinate-wise estimates, one profile per theta box.

    Samples in box k only see threshold k (the boxes are disjoint), so the joint
    log-likelihood splits into a sum of per-box profiles plus a constant.
    """
    boxes = model.theta_boxes
    for k in range(1, len(boxes)):
        if not boxes[k - 1][1] < boxes[k][0]:
            raise ContractError("theta boxes must be disjoint and ordered")
    priors = priors or [Prior.uniform(box) for box in boxes]
    if len(priors) != model.K:
        raise ContractError(f"need {model.K} priors, got {len(priors)}")
    return [estimate(build_profile(model, traj, k), priors[k]) for k in range(model.K)]


def write_result_json(path, result: EstimationResult, **meta):
    with open(path, "w") as fh:
        json.dump(result.to_record(**meta), fh, indent=2)
