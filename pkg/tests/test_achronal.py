from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from minkgh.achronal import (
    AchronalKindName,
    Verdict,
    achronal_kind,
    causal_tail,
    in_achronal,
    in_U,
    iterate_oracle,
    membership_report,
    visibility_witness,
)
from minkgh.classify import Family, classify
from minkgh.config import DEFAULT_TOLERANCES
from minkgh.errors import ClassificationMismatchError
from minkgh.minkowski import Isometry, boost, boost_matrix, rotation, rotation_matrix, translation
from minkgh.models import unipotent_isometry


def test_translation_domains() -> None:
    spacelike = translation([0.0, 1.0, 0.0])
    assert achronal_kind(spacelike).kind is AchronalKindName.ALL
    assert in_achronal(spacelike, [5.0, -1.0, 2.0]) is Verdict.INSIDE
    assert in_U(spacelike, [5.0, -1.0, 2.0]) is Verdict.INSIDE
    timelike = translation([1.0, 0.0, 0.0])
    assert achronal_kind(timelike).kind is AchronalKindName.EMPTY
    assert in_achronal(timelike, [0.0, 0.0, 0.0]) is Verdict.OUTSIDE
    assert iterate_oracle(timelike, [0.0, 0.0, 0.0], 5) is Verdict.OUTSIDE
    assert achronal_kind(translation([1.0, 1.0, 0.0])).kind is AchronalKindName.EMPTY


def test_rotation_excludes_its_axis() -> None:
    g = rotation(3, 0.5)
    shape = achronal_kind(g)
    assert shape.kind is AchronalKindName.COMPLEMENT_OF_FIXED_SET
    assert shape.irrational_rotation
    assert in_achronal(g, [1.0, 0.0, 0.0]) is Verdict.BOUNDARY
    assert in_achronal(g, [0.0, 1.0, 0.0]) is Verdict.INSIDE
    screw = rotation(4, 0.5, (1, 2), tau=[0.0, 0.0, 0.0, 1.0])
    assert achronal_kind(screw).kind is AchronalKindName.ALL


def test_boost_wedge() -> None:
    g = boost(3, 0.3)
    assert achronal_kind(g).kind is AchronalKindName.WEDGE
    assert in_achronal(g, [0.0, 1.0, 0.0]) is Verdict.INSIDE
    assert in_achronal(g, [1.0, 0.0, 0.0]) is Verdict.OUTSIDE
    assert in_achronal(g, [1.0, 1.0, 0.0]) is Verdict.BOUNDARY
    assert not in_achronal(g, [1.0, 0.0, 0.0])


def test_wedge_agrees_with_iterates(rng) -> None:
    g = boost(3, 0.3)
    checked = 0
    for point in rng.uniform(-3.0, 3.0, size=(200, 3)):
        # the separation is (2 cosh(q zeta) - 2)(x1^2 - x0^2)
        if abs(point[1] ** 2 - point[0] ** 2) <= 0.1:
            continue
        assert in_achronal(g, point) is iterate_oracle(g, point, 20)
        checked += 1
    assert checked > 100


def test_oracle_overflow_is_indeterminate() -> None:
    assert iterate_oracle(boost(3, 5.0), [0.0, 1.0, 0.0], 50) is Verdict.INDETERMINATE


def test_oracle_rejects_empty_range() -> None:
    with pytest.raises(ValueError):
        iterate_oracle(boost(3, 1.0), [0.0, 1.0, 0.0], 0)


def test_linear_unipotent_domain(linear_unipotent) -> None:
    shape = achronal_kind(linear_unipotent)
    assert shape.kind is AchronalKindName.COMPLEMENT_OF_FIXED_SET
    assert shape.hyperplane_normal is not None
    assert in_achronal(linear_unipotent, [1.0, 0.0, 0.0]) is Verdict.INSIDE
    assert in_achronal(linear_unipotent, [0.0, 0.0, 0.0]) is Verdict.BOUNDARY
    assert in_U(linear_unipotent, [1.0, 0.0, 0.0]) is Verdict.INSIDE


def test_transverse_unipotent_is_empty(transverse_unipotent) -> None:
    assert achronal_kind(transverse_unipotent).kind is AchronalKindName.EMPTY
    origin = np.zeros(3)
    witness = visibility_witness(transverse_unipotent, origin)
    assert causal_tail(transverse_unipotent, witness, origin)


def test_witness_needs_parabolic() -> None:
    with pytest.raises(ClassificationMismatchError):
        visibility_witness(boost(3, 1.0), np.zeros(3))


def test_membership_report_rows() -> None:
    rows = membership_report(boost(3, 0.3), [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], qmax=10)
    assert [row["in_achronal"] for row in rows] == ["inside", "outside"]
    assert [row["oracle"] for row in rows] == ["inside", "outside"]
    assert all("in_U" in row for row in rows)


def _family_samples(linear_unipotent, transverse_unipotent) -> list:
    parabolic = unipotent_isometry([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0)
    return [
        translation([0.0, 1.0, 0.0]),
        translation([1.0, 0.0, 0.0]),
        rotation(3, 0.5),
        boost(3, 0.05),
        Isometry(boost_matrix(4, 0.05, 1) @ rotation_matrix(4, 1.0, (2, 3)), np.zeros(4)),
        linear_unipotent,
        transverse_unipotent,
        Isometry(parabolic.L @ rotation_matrix(5, 0.7, (3, 4)), np.zeros(5)),
    ]


@pytest.mark.slow
def test_closed_forms_agree_with_iterates(rng, linear_unipotent, transverse_unipotent) -> None:
    samples = _family_samples(linear_unipotent, transverse_unipotent)
    assert {classify(g).family for g in samples} == set(Family)
    # points this close to the boundary need more than 200 iterates
    dead_band = replace(DEFAULT_TOLERANCES, boundary=5e-2)
    compared = 0
    for index in range(10_000):
        g = samples[index % len(samples)]
        x = rng.uniform(-3.0, 3.0, size=g.dim)
        if in_achronal(g, x, dead_band) is Verdict.BOUNDARY:
            continue
        closed = in_achronal(g, x)
        oracle = iterate_oracle(g, x, 200)
        if not (closed.is_decided and oracle.is_decided):
            continue
        assert closed is oracle, (classify(g).label, x.tolist())
        compared += 1
    assert compared > 5_000
