"""Threshold autoregressive models and trajectory simulation.

A model with regimes ``h_0, ..., h_K`` and thresholds ``theta_1 < ... < theta_K``
uses regime ``h_k`` when ``theta_k <= x < theta_{k+1}``.  With ``K = 1`` this is
the two-regime recursion ``X' = h(X) 1{X < theta} + g(X) 1{X >= theta} + eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InstabilityError
from .expr import RegimeFunction, parse_regime_expression
from .noise import NoiseModel

DIVERGENCE_BOUND = 1e12
DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class TarModel:
    regimes: tuple[RegimeFunction, ...]
    theta_boxes: tuple[tuple[float, float], ...]
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        regimes = tuple(r if isinstance(r, RegimeFunction) else parse_regime_expression(r) for r in self.regimes)
        boxes = tuple((float(a), float(b)) for a, b in self.theta_boxes)
        object.__setattr__(self, "regimes", regimes)
        object.__setattr__(self, "theta_boxes", boxes)
        if len(boxes) < 1 or len(regimes) != len(boxes) + 1:
            raise ContractError(f"need K >= 1 boxes and K + 1 regimes, got {len(boxes)} boxes and {len(regimes)} regimes")
        for k, (a, b) in enumerate(boxes):
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ContractError(f"theta box {k} must satisfy alpha < beta, got ({a}, {b})")
            if k and not boxes[k - 1][1] < a:
                raise ContractError(f"theta boxes {k - 1} and {k} overlap or are out of order")

    @classmethod
    def two_regime(cls, h: str, g: str, box, noise: NoiseModel | None = None) -> "TarModel":
        return cls((h, g), (tuple(box),), noise or NoiseModel())

    @classmethod
    def from_config(cls, model_cfg: dict, noise_cfg: dict | None = None) -> "TarModel":
        if "regimes" in model_cfg:
            regimes = tuple(model_cfg["regimes"])
        else:
            regimes = (model_cfg["h"], model_cfg["g"])
        boxes = tuple(tuple(b) for b in model_cfg["theta_boxes"])
        noise = NoiseModel.from_config(noise_cfg or {})
        return cls(regimes, boxes, noise)

    def to_config(self) -> dict:
        cfg = {"theta_boxes": [list(b) for b in self.theta_boxes]}
        if self.K == 1:
            cfg["h"], cfg["g"] = (r.source for r in self.regimes)
        else:
            cfg["regimes"] = [r.source for r in self.regimes]
        return cfg

    @property
    def K(self) -> int:
        return len(self.theta_boxes)

    def delta(self, k: int, x):
        """Jump of the regression function across threshold ``k`` (upper minus lower regime)."""
        return self.regimes[k + 1](x) - self.regimes[k](x)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.K,):
            raise ContractError(f"theta must have {self.K} components, got {theta.shape}")
        for k, (t, (a, b)) in enumerate(zip(theta, self.theta_boxes)):
            if not a <= t <= b:
                raise ContractError(f"theta[{k}] = {t} outside the closure of its box ({a}, {b})")
        return theta

    def box_midpoints(self) -> np.ndarray:
        return np.array([0.5 * (a + b) for a, b in self.theta_boxes])


def regime_index(theta: np.ndarray, x):
    """Number of thresholds at or below ``x``; ``x == theta_k`` goes to the upper regime."""
    return np.searchsorted(theta, x, side="right")


def regression_mean(model: TarModel, x, theta):
    theta = model.check_theta(theta)
    return _mean(model, np.asarray(x, dtype=float), theta)


def _mean(model, x, theta):
    idx = regime_index(theta, x)
    values = [r(x) for r in model.regimes]
    out = np.choose(idx, values)
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class Trajectory:
    """Recorded sample ``X_0..X_n`` with the innovations that produced it.

    ``innovations[j]`` is the noise of step ``j -> j + 1``.
    """

    values: np.ndarray
    innovations: np.ndarray | None = None
    theta_true: tuple[float, ...] | None = None
    seed_record: dict | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ContractError("a trajectory needs at least two values")
        if self.innovations is not None:
            self.innovations = np.asarray(self.innovations, dtype=float)
            if self.innovations.shape != (self.values.size - 1,):
                raise ContractError("innovations must have length n = len(values) - 1")

    @property
    def n(self) -> int:
        return self.values.size - 1


def simulate_paths(model: TarModel, theta, n: int, burn_in: int, innovations: np.ndarray):
    """Run the recursion for a batch of independent chains.

    ``innovations`` has shape ``(chains, burn_in + n)``.  Every chain starts at 0.
    Returns ``(values, eps)`` of shapes ``(chains, n + 1)`` and ``(chains, n)``
    where ``eps`` is recomputed as ``X_{j+1} - m(X_j)`` so that reconstruction
    from the stored values is exact.
    """
    theta = model.check_theta(theta)
    if n < 1 or burn_in < 0:
        raise ContractError("need n >= 1 and burn_in >= 0")
    innovations = np.atleast_2d(np.asarray(innovations, dtype=float))
    chains, steps = innovations.shape
    if steps != burn_in + n:
        raise ContractError(f"expected {burn_in + n} innovations per chain, got {steps}")
    values = np.empty((chains, n + 1))
    means = np.empty((chains, n))
    x = np.zeros(chains)
    if burn_in == 0:
        values[:, 0] = x
    for t in range(steps):
        m = _mean(model, x, theta)
        x = m + innovations[:, t]
        if not np.all(np.abs(x) <= DIVERGENCE_BOUND):
            raise InstabilityError(t + 1)
        j = t - burn_in
        if j >= 0:
            means[:, j] = m
            values[:, j + 1] = x
        elif j == -1:
            values[:, 0] = x
    return values, values[:, 1:] - means


def simulate(model: TarModel, theta, n: int, burn_in: int = DEFAULT_BURN_IN, stream=None,
             innovations=None, seed_record=None) -> Trajectory:
    """Simulate one trajectory of ``n + 1`` recorded values.

    Either ``stream`` (a numpy Generator) or explicit ``innovations`` of length
    ``burn_in + n`` must be supplied.
    """
    if innovations is None:
        if stream is None:
            raise ContractError("simulate needs a random stream or injected innovations")
        innovations = model.noise.sample(stream, burn_in + n)
    values, eps = simulate_paths(model, theta, n, burn_in, np.asarray(innovations)[None, :])
    theta_true = tuple(float(t) for t in np.atleast_1d(theta))
    return Trajectory(values[0], eps[0], theta_true, seed_record)
