"""Pareto-front bookkeeping: dominance tests, nondominated filtering,
and hypervolume (the volume between a reference point and the region
weakly dominated by a point set, under maximization).

The exact hypervolume uses a descending sweep in two dimensions and
recursive slicing on the last objective above that. A Monte Carlo
estimator is included as an independent cross-check for small exact
computations and as the only practical option in high dimensions.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def dominates(a, b) -> bool:
    """True when ``a`` is at least as good everywhere and strictly
    better somewhere (maximization)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"incomparable shapes {a.shape} and {b.shape}")
    return bool(np.all(a >= b) and np.any(a > b))


def nondominated_filter(points) -> np.ndarray:
    """Unique, mutually nondominated rows of ``points``, sorted in
    descending lexicographic order (deterministic for a given set)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.empty((0, pts.shape[1] if pts.ndim == 2 else 0))
    if pts.ndim != 2:
        raise ValueError("expected a 2-D array of points")
    pts = np.unique(pts, axis=0)
    keep = []
    for i, p in enumerate(pts):
        if not any(dominates(q, p) for j, q in enumerate(pts) if j != i):
            keep.append(i)
    return pts[keep][::-1].copy()


def _hv_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    order = np.argsort(pts[:, 0])[::-1]  # first objective descending
    total = 0.0
    best_y = ref[1]
    for x, y in pts[order]:
        if y > best_y:
            total += (x - ref[0]) * (y - best_y)
            best_y = y
    return total


def _hv_slices(pts: np.ndarray, ref: np.ndarray, section_hv) -> float:
    # Slice on the last objective: each slab's cross-section is the
    # lower-dimensional hypervolume of everything at least that high.
    levels = np.unique(pts[:, -1])[::-1]
    total = 0.0
    for i, z in enumerate(levels):
        lower = levels[i + 1] if i + 1 < len(levels) else ref[-1]
        section = pts[pts[:, -1] >= z][:, :-1]
        total += (z - lower) * section_hv(section, ref[:-1])
    return total


def _hv_exact(pts: np.ndarray, ref: np.ndarray) -> float:
    if len(pts) == 0:
        return 0.0
    if ref.size == 1:
        return float(pts[:, 0].max() - ref[0])
    if ref.size == 2:
        return _hv_2d(pts, ref)
    return _hv_slices(pts, ref, _hv_exact)


def _hv_recursive(pts: np.ndarray, ref: np.ndarray) -> float:
    # Pure recursive slicing all the way to one dimension. Slower than
    # _hv_exact (which switches to the sweep at 2-D) but shares no code
    # with the sweep below 3-D, so the two act as independent oracles
    # for each other on two-objective inputs.
    if len(pts) == 0:
        return 0.0
    if ref.size == 1:
        return float(pts[:, 0].max() - ref[0])
    return _hv_slices(pts, ref, _hv_recursive)


def _prepare_front(front, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    if ref.ndim != 1 or ref.size == 0 or not np.all(np.isfinite(ref)):
        raise ValueError("reference point must be a finite vector")
    pts = np.asarray(front, dtype=float)
    if pts.size == 0:
        return np.empty((0, ref.size)), ref
    if pts.ndim == 1:
        pts = pts[np.newaxis, :]
    if pts.shape[1] != ref.size:
        raise ValueError(
            f"points have {pts.shape[1]} objectives, reference has {ref.size}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("front contains non-finite values")
    pts = pts[np.all(pts > ref, axis=1)]
    # Canonical point order makes the result bit-identical under input
    # permutation (summation order would otherwise wobble on ties).
    return np.unique(pts, axis=0) if len(pts) else pts, ref


def hypervolume(front, ref, *, method: str = "auto") -> float:
    """Exact dominated hypervolume of ``front`` with respect to ``ref``.

    Points that do not strictly dominate the reference point contribute
    nothing and are dropped silently; dominated or duplicate members are
    harmless. An empty front has hypervolume 0.

    ``method`` selects the algorithm: ``"auto"`` uses the descending
    sweep for two objectives and objective-slicing above that;
    ``"recursive"`` forces pure slicing down to one dimension, which is
    redundant with ``"auto"`` by construction and exists so the two can
    be checked against each other.
    """
    if method not in ("auto", "recursive"):
        raise ValueError(f"unknown hypervolume method {method!r}")
    pts, ref = _prepare_front(front, ref)
    return _hv_exact(pts, ref) if method == "auto" else _hv_recursive(pts, ref)


def mc_hypervolume(
    front, ref, bound, samples: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo hypervolume estimate with its standard error.

    Samples uniformly in the box [ref, bound]; ``bound`` must weakly
    dominate every front member so the box covers the whole dominated
    region.
    """
    ref = np.asarray(ref, dtype=float)
    bound = np.asarray(bound, dtype=float)
    pts = np.asarray(front, dtype=float)
    if pts.size == 0:
        return 0.0, 0.0
    if pts.ndim == 1:
        pts = pts[np.newaxis, :]
    if ref.shape != bound.shape or pts.shape[1] != ref.size:
        raise ValueError("front, reference, and bound dimensions disagree")
    if not np.all(bound > ref):
        raise ValueError("bound must strictly dominate the reference point")
    if np.any(pts > bound):
        raise ValueError("bound must weakly dominate every front member")
    if samples < 1:
        raise ValueError("need at least one sample")
    pts = pts[np.all(pts > ref, axis=1)]
    volume = float(np.prod(bound - ref))
    if len(pts) == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    while remaining > 0:
        n = min(remaining, 65536)
        draws = ref + rng.random((n, ref.size)) * (bound - ref)
        covered = np.zeros(n, dtype=bool)
        for p in pts:
            covered |= np.all(draws <= p, axis=1)
        hits += int(covered.sum())
        remaining -= n
    frac = hits / samples
    stderr = volume * float(np.sqrt(frac * (1.0 - frac) / samples))
    return volume * frac, stderr


def hv_history(merged, ref) -> list[tuple[int, float]]:
    """Hypervolume of each (step, points) snapshot in a merged-front
    history."""
    return [(step, hypervolume(points, ref)) for step, points in merged]


def write_front_csv(points, path) -> None:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[np.newaxis, :] if pts.size else pts.reshape(0, 0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"r_{i + 1}" for i in range(pts.shape[1])])
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def read_front_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as f:
        for record in csv.reader(f):
            if not record:
                continue
            try:
                rows.append([float(v) for v in record])
            except ValueError:
                continue  # header
    if not rows:
        return np.empty((0, 0))
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"ragged rows in {Path(path).name}")
    return np.array(rows)


def write_hypervolume_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "hv"])
        for step, hv in history:
            writer.writerow([int(step), repr(float(hv))])
