"""Optimal model size location and the linear size-vs-entropy fit."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import stats

from .core import KgError

INTERIOR = "interior"
AT_MIN_SIZE = "at-min-size"
AT_MAX_SIZE = "at-max-size"

# losses within this relative band of the minimum count as ties; ties break
# toward the smaller model (quantized sweeps make the exact argmin noisy)
LOSS_TIE_TOLERANCE = 0.005


@dataclass(frozen=True)
class RunResult:
    model_params: int
    train_steps: int
    train_loss: float
    eval_loss: float
    eval_acc: float
    graph_id: str

    def __post_init__(self):
        if self.model_params <= 0:
            raise ValueError("model_params must be positive")
        if not 0.0 <= self.eval_acc <= 1.0:
            raise ValueError("eval_acc must be in [0, 1]")

    def to_record(self) -> dict:
        return {
            "model_params": self.model_params,
            "train_steps": self.train_steps,
            "train_loss": self.train_loss,
            "eval_loss": self.eval_loss,
            "eval_acc": self.eval_acc,
            "graph_id": self.graph_id,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "RunResult":
        try:
            return cls(
                model_params=int(rec["model_params"]),
                train_steps=int(rec["train_steps"]),
                train_loss=float(rec["train_loss"]),
                eval_loss=float(rec["eval_loss"]),
                eval_acc=float(rec["eval_acc"]),
                graph_id=str(rec["graph_id"]),
            )
        except KeyError as exc:
            raise KgError(f"run record missing field {exc.args[0]!r}") from exc


def read_results(path: str | Path) -> list[RunResult]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(RunResult.from_record(json.loads(line)))
    if not out:
        raise KgError(f"{path}: no run records")
    return out


@dataclass(frozen=True)
class OptimalPoint:
    entropy_bits: float
    optimal_params: int
    boundary_flag: str


@dataclass(frozen=True)
class ScalingFit:
    slope: float  # params per bit
    intercept: float  # params
    r_squared: float
    slope_ci95: tuple[float, float]
    n_points: int
    min_point_params: int

    def to_record(self) -> dict:
        return {
            "slope_params_per_bit": self.slope,
            "intercept_params": self.intercept,
            "r2": self.r_squared,
            "slope_ci95_low": self.slope_ci95[0],
            "slope_ci95_high": self.slope_ci95[1],
            "bits_per_param": bits_per_parameter(self),
            "n_points": self.n_points,
        }


def locate_optimal(results: Iterable[RunResult], entropy_bits: float) -> OptimalPoint:
    """Model size minimizing eval loss in one (graph, steps) sweep.

    Sizes with losses within LOSS_TIE_TOLERANCE of the minimum tie, and the
    smallest such size wins. The boundary flag records when the chosen size
    sits at an end of the sweep, i.e. the U-shape was not bracketed.
    """
    results = list(results)
    if len({r.graph_id for r in results}) > 1:
        raise KgError("locate_optimal: results mix multiple graphs")
    if len({r.train_steps for r in results}) > 1:
        raise KgError("locate_optimal: results mix multiple step counts")
    sizes = [r.model_params for r in results]
    if len(set(sizes)) != len(sizes):
        raise KgError("locate_optimal: duplicate model sizes in sweep")
    if len(sizes) < 2:
        raise KgError("locate_optimal: need at least 2 distinct model sizes")
    best_loss = min(r.eval_loss for r in results)
    tied = [r for r in results if r.eval_loss <= best_loss * (1.0 + LOSS_TIE_TOLERANCE)]
    chosen = min(tied, key=lambda r: r.model_params)
    if chosen.model_params == min(sizes):
        flag = AT_MIN_SIZE
    elif chosen.model_params == max(sizes):
        flag = AT_MAX_SIZE
    else:
        flag = INTERIOR
    return OptimalPoint(
        entropy_bits=entropy_bits, optimal_params=chosen.model_params, boundary_flag=flag
    )


def fit_scaling_law(points: Iterable[OptimalPoint]) -> ScalingFit:
    """Ordinary least squares of optimal size on entropy, with R^2 and a 95%
    confidence interval on the slope. Boundary-flagged points are excluded
    with a warning (an unbracketed optimum is not a measurement)."""
    points = list(points)
    boundary = [p for p in points if p.boundary_flag != INTERIOR]
    interior = [p for p in points if p.boundary_flag == INTERIOR]
    if boundary:
        warnings.warn(
            f"excluding {len(boundary)} boundary-flagged points from the fit",
            stacklevel=2,
        )
    if len(interior) < 3:
        raise KgError(f"need >= 3 interior points to fit, have {len(interior)}")
    x = np.array([p.entropy_bits for p in interior], dtype=float)
    y = np.array([p.optimal_params for p in interior], dtype=float)
    if np.ptp(x) == 0.0:
        raise KgError("zero entropy variance across points")
    res = stats.linregress(x, y)
    n = len(x)
    tcrit = float(stats.t.ppf(0.975, n - 2))
    ci = (res.slope - tcrit * res.stderr, res.slope + tcrit * res.stderr)
    return ScalingFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue**2),
        slope_ci95=(float(ci[0]), float(ci[1])),
        n_points=n,
        min_point_params=int(min(p.optimal_params for p in interior)),
    )


def predict_optimal_size(
    fit: ScalingFit, entropy_bits: float, min_size: int | None = None
) -> int:
    """round(slope * entropy + intercept), floored at the smallest size seen
    in the fit (or an explicit ``min_size``)."""
    floor = fit.min_point_params if min_size is None else min_size
    raw = fit.slope * entropy_bits + fit.intercept
    pred = int(round(raw))
    if pred < floor:
        warnings.warn(
            f"prediction {pred} below smallest sweep size {floor}; flooring",
            stacklevel=2,
        )
        return floor
    return pred


def bits_per_parameter(fit: ScalingFit) -> float:
    """Information reasoned over per parameter at the optimal size: 1 / slope."""
    if fit.slope <= 0:
        raise KgError(f"bits_per_parameter undefined for slope {fit.slope}")
    return 1.0 / fit.slope
