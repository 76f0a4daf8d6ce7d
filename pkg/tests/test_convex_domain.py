from __future__ import annotations

import numpy as np
import pytest

from minkgh.convex_domain import (
    DomainOrientation,
    LambdaSet,
    cosmological_time,
    gauss_lipschitz_check,
    hyperboloid_directions,
    is_future_regular,
    is_past_regular,
    level_set_sample,
    misner_lambda,
    omega_membership,
    radiant_lambda,
    refinement_report,
    transform_lambda,
)
from minkgh.errors import EmptyLambdaError, OutsideDomainError
from minkgh.minkowski import Isometry, mink_norm2, random_lorentz
from minkgh.penrose import LightPlane


def _misner_time(p) -> float:
    return float(np.sqrt(p[0] ** 2 - p[1] ** 2))


def test_lambda_set_needs_planes() -> None:
    with pytest.raises(EmptyLambdaError):
        LambdaSet(())


def test_membership() -> None:
    lam = misner_lambda(3)
    assert omega_membership(lam, [1.0, 0.0, 5.0])
    assert not omega_membership(lam, [1.0, 2.0, 0.0])
    past = lam.with_orientation(DomainOrientation.PAST)
    assert omega_membership(past, [-1.0, 0.5, 0.0])
    assert not omega_membership(past, [1.0, 0.5, 0.0])


def test_reflection_is_an_involution() -> None:
    lam = radiant_lambda(3, 6)
    back = lam.reflected().reflected()
    assert back.orientation is lam.orientation
    assert np.allclose(back.directions, lam.directions)
    assert np.allclose(back.levels, lam.levels)


def test_regularity() -> None:
    lam = misner_lambda(3)
    future = is_future_regular(lam)
    assert future.regular
    assert omega_membership(lam, future.witness)
    past = is_past_regular(lam)
    assert past.regular
    assert omega_membership(lam.with_orientation(DomainOrientation.PAST), past.witness)
    single = LambdaSet((LightPlane.from_direction([1.0, 1.0, 0.0], 0.0),))
    result = is_future_regular(single)
    assert not result.regular
    assert result.distinct_directions == 1


def test_misner_cosmological_time() -> None:
    lam = misner_lambda(3)
    p = np.array([2.0, 0.5, 0.3])
    ct = cosmological_time(lam, p)
    assert ct.T == pytest.approx(np.sqrt(3.75), rel=1e-9)
    residuals = ct.residuals(lam, p)
    assert residuals["gauss_norm"] < 1e-9
    assert residuals["segment"] < 1e-9
    assert residuals["active"] < 1e-9


def test_past_cosmological_time() -> None:
    lam = misner_lambda(3).with_orientation(DomainOrientation.PAST)
    ct = cosmological_time(lam, [-2.0, 0.5, 0.3])
    assert ct.T == pytest.approx(np.sqrt(3.75), rel=1e-9)
    assert ct.gauss[0] < 0


def test_radiant_time_near_axis() -> None:
    lam = radiant_lambda(3, 8)
    p = np.array([2.0, 0.3, 0.1])
    ct = cosmological_time(lam, p)
    assert ct.T == pytest.approx(np.sqrt(-mink_norm2(p)), rel=1e-9)
    assert np.allclose(ct.retraction, 0.0, atol=1e-8)


def test_outside_point_is_rejected() -> None:
    with pytest.raises(OutsideDomainError):
        cosmological_time(misner_lambda(3), [0.0, 1.0, 0.0])


def test_threaded_faces_agree() -> None:
    lam = radiant_lambda(3, 8)
    p = [3.0, 1.0, -0.5]
    assert cosmological_time(lam, p, threads=4).T == pytest.approx(cosmological_time(lam, p, threads=1).T, rel=1e-12)


def test_time_is_equivariant(rng) -> None:
    lam = radiant_lambda(3, 8)
    g = Isometry(random_lorentz(3, rng, 0.3), rng.normal(size=3))
    moved = transform_lambda(g, lam)
    for p in ([2.0, 0.3, 0.1], [3.0, 1.0, -0.5]):
        assert cosmological_time(moved, g(p)).T == pytest.approx(cosmological_time(lam, p).T, rel=1e-7)


def test_level_set_sample(rng) -> None:
    lam = misner_lambda(3)
    seeds = hyperboloid_directions(3, 12, rng, spread=0.5)
    sample = level_set_sample(lam, 1.0, seeds)
    assert not sample.failures
    assert sample.points.shape == (12, 3)
    for point in sample.points:
        assert _misner_time(point) == pytest.approx(1.0, rel=1e-8)
    assert len(sample.rows()[0]) == 6


def test_gauss_map_lipschitz(rng) -> None:
    lam = radiant_lambda(3, 8)
    t = 2.0
    points = t * hyperboloid_directions(3, 10, rng, spread=0.1)
    pairs = [(points[i], points[i + 1]) for i in range(len(points) - 1)]
    report = gauss_lipschitz_check(lam, t, pairs)
    assert report.passed
    assert report.bound == pytest.approx(0.5)


def test_refinement_report_on_axis() -> None:
    points = [[2.0, 0.3, 0.1], [1.5, 0.0, 0.2]]
    report = refinement_report(radiant_lambda(3, 8), radiant_lambda(3, 16), points)
    assert report["points"] == 2
    assert report["max_abs_difference"] < 1e-9
    assert report["fine_planes"] == 16
