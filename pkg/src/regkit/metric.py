"""Finite metric spaces: distances, balls and excess.

Points are referenced by integer index.  A space is backed either by
coordinate vectors with a norm metric (euclidean / manhattan / chebyshev)
or by an explicit distance matrix, which is audited for metric axioms at
load time.  Every finite metric space is complete, so no completeness
hypothesis ever needs checking downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .policy import DEFAULT_POLICY, INF, NumericPolicy

NORM_METRICS = ("euclidean", "manhattan", "chebyshev")


class MetricError(ValueError):
    pass


def _pairwise(coords: np.ndarray, metric: str) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diff ** 2).sum(-1))
    if metric == "manhattan":
        return np.abs(diff).sum(-1)
    if metric == "chebyshev":
        return np.abs(diff).max(-1)
    raise MetricError(f"unknown metric {metric!r}")


@dataclass
class FiniteMetricSpace:
    """A finite point set with a metric; immutable after construction."""

    metric: str
    coords: Optional[np.ndarray] = None
    labels: Optional[list] = None
    dmatrix: Optional[np.ndarray] = None
    policy: NumericPolicy = field(default=DEFAULT_POLICY)

    def __post_init__(self):
        if self.metric in NORM_METRICS:
            if self.coords is None:
                raise MetricError("norm metric requires coordinates")
            arr = np.asarray(self.coords, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)  # scalars are points on the line
            self.coords = arr
            self._n = arr.shape[0]
            # cache the full matrix only for small spaces; large ones use rows
            self._dmat = _pairwise(self.coords, self.metric) if self._n <= 2000 else None
        elif self.metric == "matrix":
            if self.dmatrix is None:
                raise MetricError("explicit-matrix metric requires dmatrix")
            m = np.asarray(self.dmatrix, dtype=float)
            self._audit_matrix(m)
            self.dmatrix = m
            self._dmat = m
            self._n = m.shape[0]
        else:
            raise MetricError(f"unknown metric {self.metric!r}")

    def _audit_matrix(self, m: np.ndarray):
        tol = self.policy.triangle_tol
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MetricError("dmatrix must be square")
        if (m < -tol).any():
            raise MetricError("dmatrix has negative entries")
        if np.abs(np.diag(m)).max(initial=0.0) > tol:
            raise MetricError("dmatrix has nonzero diagonal")
        if np.abs(m - m.T).max(initial=0.0) > tol:
            raise MetricError("dmatrix is not symmetric")
        # O(n^3) triangle audit, vectorized over the middle point
        viol = m[:, None, :] - (m[:, :, None] + m[None, :, :])
        worst = viol.max()
        if worst > tol:
            i, r, j = np.unravel_index(np.argmax(viol), viol.shape)
            raise MetricError(
                f"triangle inequality violated by {worst:.3g} at ({i},{r},{j})")

    def __len__(self) -> int:
        return self._n

    @property
    def n(self) -> int:
        return self._n

    def d(self, i: int, j: int) -> float:
        self._check(i)
        self._check(j)
        if self._dmat is not None:
            return float(self._dmat[i, j])
        return float(self.dist_row(i)[j])

    def dist_row(self, i: int) -> np.ndarray:
        """Distances from point i to every point, as a vector."""
        self._check(i)
        if self._dmat is not None:
            return self._dmat[i]
        diff = self.coords - self.coords[i]
        if self.metric == "euclidean":
            return np.sqrt((diff ** 2).sum(-1))
        if self.metric == "manhattan":
            return np.abs(diff).sum(-1)
        return np.abs(diff).max(-1)

    def diameter(self) -> float:
        if self._dmat is not None:
            return float(self._dmat.max(initial=0.0))
        return max((self.dist_row(i).max() for i in range(self._n)), default=0.0)

    def _check(self, i: int):
        if not (0 <= int(i) < self._n):
            raise IndexError(f"point index {i} out of range [0,{self._n})")

    @classmethod
    def from_grid(cls, values: Sequence[float], metric: str = "euclidean",
                  policy: NumericPolicy = DEFAULT_POLICY) -> "FiniteMetricSpace":
        pts = np.asarray(values, dtype=float).reshape(-1, 1)
        return cls(metric=metric, coords=pts, policy=policy)


@dataclass(frozen=True)
class BallSpec:
    center: int
    radius: float
    kind: str = "closed"  # "open" | "closed"

    def __post_init__(self):
        if self.radius < 0:
            raise MetricError("negative ball radius")
        if self.kind not in ("open", "closed"):
            raise MetricError(f"bad ball kind {self.kind!r}")


def point_set_distance(space: FiniteMetricSpace, x: int, S: Iterable[int]) -> float:
    """min over s in S of d(x, s); +inf for empty S."""
    idx = np.fromiter((int(s) for s in S), dtype=int)
    if idx.size == 0:
        return INF
    space._check(x)
    if idx.size and (idx.min() < 0 or idx.max() >= space.n):
        raise IndexError("set contains invalid point index")
    return float(space.dist_row(x)[idx].min())


def ball_members(space: FiniteMetricSpace, ball: BallSpec) -> set[int]:
    """Point indices inside the ball; open radius-0 is the singleton {center}."""
    pol = space.policy
    space._check(ball.center)
    row = space.dist_row(ball.center)
    if ball.kind == "open":
        if ball.radius == 0:
            return {ball.center}
        mask = row < ball.radius - pol.tol_strict
    else:
        mask = row <= ball.radius + pol.tol_strict
    return set(np.nonzero(mask)[0].tolist())


def excess(space: FiniteMetricSpace, A: Iterable[int], B: Iterable[int]) -> float:
    """sup over a in A of d(a, B); 0 for empty A, +inf for nonempty A, empty B."""
    A = list(A)
    B = list(B)
    if not A:
        return 0.0
    if not B:
        return INF
    bidx = np.asarray(B, dtype=int)
    return max(float(space.dist_row(a)[bidx].min()) for a in A)
