"""The compound Poisson limit of the normalised likelihood ratio.

``Z(u)`` is piecewise constant: on ``u >= 0`` it jumps by
``ln f(eps + delta0) / f(eps)`` at the points of a rate-``lam`` Poisson process,
on ``u < 0`` by ``ln f(eps - delta0) / f(eps)`` at the points of an independent
copy.  ``u_tilde = int u Z du / int Z du`` is computed exactly on ``[-U, U]``,
doubling ``U`` until both integrals settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ContractError, TruncationError
from .invariant import InvariantDensity, intensity_at_threshold, invariant_density
from .model import TarModel
from .noise import NoiseModel

DEFAULT_TOL = 1e-6
START_WINDOW = 20.0  # initial U in units of 1/lam
MAX_WINDOW = 1e5  # U_max in units of 1/lam
MIN_RISK_DRAWS = 100
TAIL_FACTOR = 1e-3


@dataclass(frozen=True)
class LimitLaw:
    noise: NoiseModel
    delta0: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ContractError("intensity must be positive")
        if self.delta0 == 0 or not math.isfinite(self.delta0):
            raise ContractError("delta0 must be finite and non-zero")

    @classmethod
    def from_model(cls, model: TarModel, theta, box_index: int = 0,
                   density: InvariantDensity | None = None) -> "LimitLaw":
        theta = model.check_theta(theta)
        density = density or invariant_density(model, theta)
        t0 = float(theta[box_index])
        return cls(model.noise, float(model.delta(box_index, t0)), intensity_at_threshold(density, t0))

    def metadata(self) -> dict:
        return {"lambda": self.lam, "delta0": self.delta0, "noise": self.noise.to_config()}


def side_integrals(times: np.ndarray, log_jumps: np.ndarray, window: float, shift: float = 0.0):
    """Integrals of ``exp(L - shift)`` and ``|u| exp(L - shift)`` over ``[0, window]`` on one side.

    ``times`` are the jump times inside the window, ``L`` the running sum of
    ``log_jumps`` (zero before the first jump).
    """
    edges = np.concatenate([[0.0], times, [window]])
    levels = np.concatenate([[0.0], np.cumsum(log_jumps)]) - shift
    w = np.exp(levels)
    left, right = edges[:-1], edges[1:]
    return float(np.dot(w, right - left)), float(np.dot(w, 0.5 * (right - left) * (right + left)))


def limit_integrals(pos_times, pos_log, neg_times, neg_log, window):
    """Return ``(int u Z du, int Z du, log_scale, int |u| Z du)`` on ``[-window, window]``.

    All integrals are scaled by ``exp(-log_scale)``; ``log_scale`` is the largest
    value of ``ln Z``.
    """
    pos_times, neg_times = np.asarray(pos_times, float), np.asarray(neg_times, float)
    pos_log, neg_log = np.asarray(pos_log, float), np.asarray(neg_log, float)
    scale = max(0.0, float(np.max(np.cumsum(pos_log), initial=0.0)), float(np.max(np.cumsum(neg_log), initial=0.0)))
    p0, p1 = side_integrals(pos_times, pos_log, window, scale)
    n0, n1 = side_integrals(neg_times, neg_log, window, scale)
    return p1 - n1, p0 + n0, scale, p1 + n1


class _Side:
    def __init__(self, law: LimitLaw, sign: float, rng: np.random.Generator):
        self.law, self.sign, self.rng = law, sign, rng
        self.times = np.empty(0)
        self.eps = np.empty(0)
        self.log_jumps = np.empty(0)

    def extend(self, window):
        lam = self.law.lam
        while (self.times[-1] if self.times.size else 0.0) <= window:
            last = self.times[-1] if self.times.size else 0.0
            batch = int(lam * (window - last) * 1.25) + 16
            gaps = self.rng.exponential(1.0 / lam, size=batch)
            eps = self.law.noise.sample(self.rng, batch)
            self.times = np.concatenate([self.times, last + np.cumsum(gaps)])
            self.eps = np.concatenate([self.eps, eps])
            self.log_jumps = np.concatenate(
                [self.log_jumps, self.law.noise.log_jump(eps, self.sign * self.law.delta0)])

    def within(self, window):
        k = int(np.searchsorted(self.times, window, side="right"))
        return self.times[:k], self.log_jumps[:k], self.eps[:k]


@dataclass(frozen=True)
class LimitProcessDraw:
    pos_jump_times: np.ndarray
    pos_log_jumps: np.ndarray
    neg_jump_times: np.ndarray
    neg_log_jumps: np.ndarray
    truncation_U: float
    u_tilde: float
    integral_Z: float
    pos_eps: np.ndarray | None = None
    neg_eps: np.ndarray | None = None
    doublings: int = 0

    def log_Z(self, u):
        """ln Z(u), right-continuous in |u| on each side."""
        u = np.asarray(u, dtype=float)
        pos = np.concatenate([[0.0], np.cumsum(self.pos_log_jumps)])
        neg = np.concatenate([[0.0], np.cumsum(self.neg_log_jumps)])
        out = np.where(
            u >= 0,
            pos[np.searchsorted(self.pos_jump_times, np.abs(u), side="right")],
            neg[np.searchsorted(self.neg_jump_times, np.abs(u), side="right")],
        )
        return out[()] if out.ndim == 0 else out


def sample_limit_draw(law: LimitLaw, tol: float = DEFAULT_TOL, stream: np.random.Generator | None = None,
                      keep_eps: bool = False) -> LimitProcessDraw:
    if not 0 < tol < 1:
        raise ContractError("tol must lie in (0, 1)")
    rng = stream if stream is not None else np.random.default_rng()
    pos, neg = _Side(law, 1.0, rng), _Side(law, -1.0, rng)
    window = START_WINDOW / law.lam
    cap = MAX_WINDOW / law.lam

    def evaluate(w):
        pos.extend(w)
        neg.extend(w)
        pt, pl, _ = pos.within(w)
        nt, nl, _ = neg.within(w)
        num, den, scale, _ = limit_integrals(pt, pl, nt, nl, w)
        end_level = max(float(np.sum(pl)), float(np.sum(nl))) - scale
        return num, den, scale, end_level

    prev = evaluate(window)
    doublings = 0
    while True:
        if 2 * window > cap:
            raise TruncationError(
                f"truncation window reached U_max = {cap:.6g} without settling (tolerance {tol})",
                residual=None,
            )
        window *= 2
        doublings += 1
        cur = evaluate(window)
        # compare on a common scale
        s = cur[2]
        den_old = prev[1] * math.exp(prev[2] - s)
        num_old = prev[0] * math.exp(prev[2] - s)
        d_den = abs(cur[1] - den_old) / cur[1]
        # relative change of int uZ du, floored at the natural length scale 1/lam when it is near zero
        d_num = abs(cur[0] - num_old) / max(abs(cur[0]), cur[1] / law.lam)
        # Z is a mean-one martingale, so P(sup_{u>U} Z >= c) <= Z(U) / c (Ville); a small
        # end level makes a late excursion worth more than tol of the integrals unlikely
        # an excursion of length 1/lam at distance U, relative to the scale of int uZ du
        tail = math.exp(cur[3]) * window / (law.lam * max(abs(cur[0]), cur[1] / law.lam))
        prev = cur
        if d_den < tol and d_num < tol and tail < TAIL_FACTOR * tol:
            break

    num, den, scale, _ = prev
    pt, pl, pe = pos.within(window)
    nt, nl, ne = neg.within(window)
    return LimitProcessDraw(
        pt, pl, nt, nl, window, num / den, den * math.exp(scale),
        pe if keep_eps else None, ne if keep_eps else None, doublings,
    )


def _draw_stream(seed: int, i: int):
    return streams.derive_stream(seed, streams.LIMIT_DRAW, i)


def limit_draws(law: LimitLaw, draws: int, tol: float = DEFAULT_TOL, seed: int = 0, start: int = 0,
                keep_eps: bool = False) -> list[LimitProcessDraw]:
    return [sample_limit_draw(law, tol, _draw_stream(seed, i), keep_eps) for i in range(start, start + draws)]


def limit_sample(law: LimitLaw, draws: int, tol: float = DEFAULT_TOL, seed: int = 0, start: int = 0) -> np.ndarray:
    """I.i.d. draws of u_tilde; draw ``i`` uses its own stream derived from ``(seed, i)``."""
    if draws < 1:
        raise ContractError("draws must be at least 1")
    return np.array([d.u_tilde for d in limit_draws(law, draws, tol, seed, start)])


@dataclass(frozen=True)
class RiskEstimate:
    estimate: float
    std_error: float


def moment(sample: np.ndarray, p: float) -> RiskEstimate:
    vals = np.abs(np.asarray(sample, dtype=float)) ** p
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return RiskEstimate(float(vals.mean()), se)


def risk_bound(law: LimitLaw, p: float = 2.0, draws: int = 10_000, tol: float = DEFAULT_TOL,
               seed: int = 0) -> RiskEstimate:
    """Monte Carlo E|u_tilde|^p; with p = 2 this is the minimax lower bound."""
    if draws < MIN_RISK_DRAWS:
        raise ContractError(f"need at least {MIN_RISK_DRAWS} draws")
    if not p >= 0:
        raise ContractError("p must be non-negative")
    return moment(limit_sample(law, draws, tol, seed), p)
