"""Turning a Q-matrix (one row per action, one column per objective)
into per-action scores an agent can argmax.

Two schemes: plain linear weighting, and thresholded lexicographic
ordering, where every objective except the last is clipped at a
threshold before weighting. Clipping makes "good enough" values of the
early objectives indistinguishable, so the later ones break ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalarizationSpec:
    kind: str  # "linear" | "tlo"
    weights: tuple[float, ...]
    thresholds: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "tlo"):
            raise ValueError(f"unknown scalarization kind {self.kind!r}")
        if not self.weights:
            raise ValueError("weights may not be empty")
        if any(not np.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if not any(w > 0 for w in self.weights):
            raise ValueError("at least one weight must be positive")
        if self.kind == "linear":
            if self.thresholds is not None:
                raise ValueError("linear scalarization takes no thresholds")
        else:
            if self.thresholds is None:
                raise ValueError("tlo scalarization requires thresholds")
            if len(self.thresholds) != len(self.weights) - 1:
                raise ValueError(
                    f"need {len(self.weights) - 1} thresholds for "
                    f"{len(self.weights)} objectives, got {len(self.thresholds)}"
                )
            if any(not np.isfinite(t) for t in self.thresholds):
                raise ValueError("thresholds must be finite")

    @property
    def n_objectives(self) -> int:
        return len(self.weights)


def linear_spec(weights) -> ScalarizationSpec:
    return ScalarizationSpec("linear", tuple(float(w) for w in weights))


def tlo_spec(thresholds, weights=None) -> ScalarizationSpec:
    """TLO with uniform weights (1/n each) unless told otherwise."""
    thresholds = tuple(float(t) for t in thresholds)
    if weights is None:
        n = len(thresholds) + 1
        weights = (1.0 / n,) * n
    return ScalarizationSpec("tlo", tuple(float(w) for w in weights), thresholds)


def tlo_truncate(q: np.ndarray, thresholds) -> np.ndarray:
    """min(q_i, t_i) on every objective but the last, which passes
    through. Works on any array whose final axis is objectives."""
    q = np.asarray(q, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if q.shape[-1] != len(thresholds) + 1:
        raise ValueError(
            f"{len(thresholds)} thresholds do not fit {q.shape[-1]} objectives"
        )
    out = q.copy()
    out[..., :-1] = np.minimum(out[..., :-1], thresholds)
    return out


def scalarize(q: np.ndarray, spec: ScalarizationSpec) -> np.ndarray:
    """Collapse the objective axis: (..., n_actions, n_objectives) ->
    (..., n_actions)."""
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != spec.n_objectives:
        raise ValueError(
            f"Q has {q.shape[-1]} objectives, spec expects {spec.n_objectives}"
        )
    if spec.kind == "tlo":
        q = tlo_truncate(q, spec.thresholds)
    return q @ np.asarray(spec.weights)


def greedy_action(scores: np.ndarray) -> int:
    """Lowest-index argmax, so ties resolve deterministically."""
    scores = np.asarray(scores)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a non-empty vector")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return int(np.argmax(scores))


def epsilon_greedy(scores: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(len(scores)))
    return greedy_action(scores)
