"""ZDT benchmark problems and Pareto-front quality metrics.

Used to validate the optimizer against fronts that are known in closed
form: zdt1 (convex), zdt2 (concave), zdt3 (disconnected).
"""

from __future__ import annotations

import numpy as np

from .errors import GranucastError
from .sunflower import Bounds, EmptyArchive, OptimizationProblem, ParetoArchive


class OutOfDomain(GranucastError):
    pass


def zdt_evaluate(which: int, v: np.ndarray) -> tuple[float, float]:
    """Evaluate one of the three benchmark functions on [0, 1]^dim."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or len(v) < 2:
        raise OutOfDomain("need a 1-D decision vector with at least 2 components")
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise OutOfDomain(f"decision vector outside [0, 1]^dim: {v}")
    p1 = float(v[0])
    g = 1.0 + 9.0 / (len(v) - 1) * float(v[1:].sum())
    ratio = p1 / g
    if which == 1:
        h = 1.0 - np.sqrt(ratio)
    elif which == 2:
        h = 1.0 - ratio**2
    elif which == 3:
        h = 1.0 - np.sqrt(ratio) - ratio * np.sin(10.0 * np.pi * p1)
    else:
        raise ValueError(f"which must be 1, 2 or 3, got {which}")
    return p1, float(g * h)


def zdt_problem(which: int, dim: int = 4) -> OptimizationProblem:
    return OptimizationProblem(
        evaluate=lambda v: np.array(zdt_evaluate(which, v)),
        bounds=Bounds.cube(0.0, 1.0, dim),
        objective_count=2,
    )


def zdt1_front(samples: int) -> np.ndarray:
    f1 = np.linspace(0.0, 1.0, samples)
    return np.column_stack([f1, 1.0 - np.sqrt(f1)])


def zdt2_front(samples: int) -> np.ndarray:
    f1 = np.linspace(0.0, 1.0, samples)
    return np.column_stack([f1, 1.0 - f1**2])


def zdt3_front(samples: int, resolution: int = 100_001) -> np.ndarray:
    """Non-dominated part of the disconnected zdt3 curve.

    The curve is swept densely in f1; with f1 strictly increasing a point
    is non-dominated exactly when its f2 beats every earlier one, so a
    strict prefix-minimum filter recovers the front segments.
    """
    f1 = np.linspace(0.0, 1.0, resolution)
    f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)
    keep = np.empty(resolution, dtype=bool)
    keep[0] = True
    keep[1:] = f2[1:] < np.minimum.accumulate(f2)[:-1]
    points = np.column_stack([f1[keep], f2[keep]])
    picks = np.round(np.linspace(0, len(points) - 1, samples)).astype(int)
    return points[picks]


def front_quality(archive, reference: np.ndarray) -> tuple[float, float]:
    """(inverted generational distance, spacing) of an archive vs a reference.

    IGD averages, over reference points, the distance to the closest
    archive objective vector; spacing is the standard deviation of
    archive-internal nearest-neighbor distances (0 for a single member).
    """
    if isinstance(archive, ParetoArchive):
        if not archive.members:
            raise EmptyArchive("cannot score an empty archive")
        objectives = archive.objectives_array()
    else:
        objectives = np.atleast_2d(np.asarray(archive, dtype=np.float64))
        if objectives.size == 0:
            raise EmptyArchive("cannot score an empty archive")
    reference = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    cross = np.linalg.norm(reference[:, None, :] - objectives[None, :, :], axis=2)
    igd = float(cross.min(axis=1).mean())
    if len(objectives) < 2:
        return igd, 0.0
    inner = np.linalg.norm(objectives[:, None, :] - objectives[None, :, :], axis=2)
    np.fill_diagonal(inner, np.inf)
    return igd, float(inner.min(axis=1).std())
