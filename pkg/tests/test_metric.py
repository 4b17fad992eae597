"""Finite metric spaces: axioms, balls, distances to sets, excess."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regkit.metric import (BallSpec, FiniteMetricSpace, MetricError,
                           ball_members, excess, point_set_distance)
from regkit.policy import INF

coords_1d = st.lists(st.floats(-50, 50), min_size=2, max_size=12)


@settings(max_examples=50, deadline=None)
@given(coords_1d, st.sampled_from(["euclidean", "manhattan", "chebyshev"]))
def test_metric_axioms(vals, metric):
    sp = FiniteMetricSpace(metric=metric, coords=np.array(vals))
    n = sp.n
    M = np.stack([sp.dist_row(i) for i in range(n)])
    assert np.allclose(np.diag(M), 0.0)
    assert np.allclose(M, M.T)
    assert (M >= 0).all()
    # triangle inequality, all middle points
    assert (M[:, None, :] <= M[:, :, None] + M[None, :, :] + 1e-9).all()


def test_scalar_coords_are_line_points():
    sp = FiniteMetricSpace(metric="euclidean", coords=np.array([0.0, 3.0, 7.0]))
    assert sp.d(0, 2) == pytest.approx(7.0)
    assert sp.diameter() == pytest.approx(7.0)


def test_matrix_backend_audits_axioms():
    good = np.array([[0.0, 1.0], [1.0, 0.0]])
    sp = FiniteMetricSpace(metric="matrix", dmatrix=good)
    assert sp.d(0, 1) == 1.0
    with pytest.raises(MetricError, match="symmetric"):
        FiniteMetricSpace(metric="matrix",
                          dmatrix=np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(MetricError, match="diagonal"):
        FiniteMetricSpace(metric="matrix",
                          dmatrix=np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(MetricError, match="negative"):
        FiniteMetricSpace(metric="matrix",
                          dmatrix=np.array([[0.0, -1.0], [-1.0, 0.0]]))
    tri = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(MetricError, match="triangle"):
        FiniteMetricSpace(metric="matrix", dmatrix=tri)


def test_unknown_metric_rejected():
    with pytest.raises(MetricError):
        FiniteMetricSpace(metric="cosine", coords=np.array([0.0, 1.0]))
    with pytest.raises(MetricError):
        FiniteMetricSpace(metric="euclidean")   # no coordinates


def test_ball_semantics():
    sp = FiniteMetricSpace.from_grid([0.0, 1.0, 2.0, 3.0])
    assert ball_members(sp, BallSpec(0, 2.0, "closed")) == {0, 1, 2}
    assert ball_members(sp, BallSpec(0, 2.0, "open")) == {0, 1}
    assert ball_members(sp, BallSpec(1, 0.0, "open")) == {1}
    assert ball_members(sp, BallSpec(1, 0.0, "closed")) == {1}
    with pytest.raises(MetricError):
        BallSpec(0, -1.0)
    with pytest.raises(MetricError):
        BallSpec(0, 1.0, "half-open")


def test_point_set_distance_and_excess():
    sp = FiniteMetricSpace.from_grid([0.0, 1.0, 4.0])
    assert point_set_distance(sp, 0, [1, 2]) == 1.0
    assert point_set_distance(sp, 0, []) == INF
    with pytest.raises(IndexError):
        point_set_distance(sp, 0, [7])
    assert excess(sp, [0, 2], [1]) == 3.0
    assert excess(sp, [], [1]) == 0.0
    assert excess(sp, [0], []) == INF


@settings(max_examples=25, deadline=None)
@given(coords_1d)
def test_excess_triangle_property(vals):
    sp = FiniteMetricSpace(metric="euclidean", coords=np.array(vals))
    A = list(range(0, sp.n, 2))
    B = list(range(1, sp.n, 2)) or [0]
    C = list(range(sp.n))
    # excess(A, C) <= excess(A, B) + excess(B, C)
    assert excess(sp, A, C) <= excess(sp, A, B) + excess(sp, B, C) + 1e-9


def test_index_bounds_checked():
    sp = FiniteMetricSpace.from_grid([0.0, 1.0])
    with pytest.raises(IndexError):
        sp.d(0, 5)
    with pytest.raises(IndexError):
        sp.dist_row(-3)
