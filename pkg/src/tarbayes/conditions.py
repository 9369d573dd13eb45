"""Numerical checks of the model assumptions.

These are diagnostics, not proofs: separation of the regimes on every theta
box, boundedness of the divergence integral over the jump sizes that can
occur, convergence of the invariant-density solver, and a crude drift test.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import TarError
from .invariant import GridSpec, intensity_at_threshold, invariant_density
from .model import TarModel

A2_GRID = 10_000
A5_GRID = 25
SEPARATION_FLOOR = 1e-12


@dataclass
class ConditionItem:
    name: str
    status: str  # "pass" | "warn" | "fail"
    value: float | None = None
    detail: str = ""


@dataclass
class ConditionReport:
    items: list[ConditionItem] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(item.status == "pass" for item in self.items)

    def __getitem__(self, name) -> ConditionItem:
        for item in self.items:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "items": [asdict(i) for i in self.items]}


def delta_image(model: TarModel, k: int, points: int = A2_GRID) -> np.ndarray:
    a, b = model.theta_boxes[k]
    return np.asarray(model.delta(k, np.linspace(a, b, points)), dtype=float)


def check_conditions(model: TarModel, theta=None, grid_spec: GridSpec | None = None) -> ConditionReport:
    report = ConditionReport()
    sigma = np.sqrt(model.noise.variance)

    for k in range(model.K):
        d = delta_image(model, k)
        if not np.all(np.isfinite(d)):
            report.items.append(ConditionItem(f"a2[{k}]", "fail", None, "regime difference not finite on the box"))
            continue
        sep = float(np.min(np.abs(d)))
        status = "pass" if sep > SEPARATION_FLOOR else "fail"
        report.items.append(ConditionItem(f"a2[{k}]", status, sep, "min |delta| over the theta box"))

        zs = np.linspace(d.min(), d.max(), A5_GRID)
        try:
            sup_j = max(model.noise.divergence_integral(z) for z in zs)
        except TarError as exc:
            report.items.append(ConditionItem(f"a5[{k}]", "fail", None, str(exc)))
        else:
            detail = f"sup J over delta image [{d.min():.6g}, {d.max():.6g}]"
            if model.noise.family == "gaussian":
                zmax = float(np.max(np.abs(zs)))
                s = model.noise.sigma
                detail += f"; gaussian bound {zmax**2 / (2 * s**2) + zmax / s:.6g}"
            status = "pass" if np.isfinite(sup_j) else "fail"
            report.items.append(ConditionItem(f"a5[{k}]", status, float(sup_j), detail))

    theta = model.box_midpoints() if theta is None else np.atleast_1d(theta)
    try:
        dens = invariant_density(model, theta, grid_spec)
        lam = min(intensity_at_threshold(dens, t) for t in theta)
    except TarError as exc:
        report.items.append(ConditionItem("a4", "warn", None, f"invariant density solver: {exc}"))
    else:
        report.items.append(ConditionItem(
            "a4", "pass", dens.residual,
            f"solver converged in {dens.iterations} iterations; min intensity at thresholds {lam:.6g}",
        ))

    far = np.array([20.0, 50.0, 100.0]) * sigma
    xs = np.concatenate([-far, far])
    slopes = np.abs(np.asarray([model.regimes[0](x) for x in -far] + [model.regimes[-1](x) for x in far])) / np.abs(xs)
    slope = float(np.max(slopes)) if np.all(np.isfinite(slopes)) else float("inf")
    report.items.append(ConditionItem(
        "drift", "pass" if slope < 1 else "warn", slope, "max |m(x)/x| of the outer regimes for |x| >= 20 std",
    ))
    return report
