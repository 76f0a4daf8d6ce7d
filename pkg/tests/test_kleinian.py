from __future__ import annotations

import numpy as np
import pytest

from minkgh.cohomology import three_punctured_sphere
from minkgh.convex_domain import DomainOrientation
from minkgh.errors import EnumerationLimitError, InputValidationError, RelationResidualError
from minkgh.kleinian import (
    AdmissibilityStatus,
    ElementaryKind,
    GroupSpec,
    admissibility,
    enumerate_words,
    evaluate_word,
    format_word,
    is_elementary,
    limit_set_approx,
    plane_fixed_residual,
    refinement_curve,
)
from minkgh.minkowski import boost, rotation, rotation_matrix, translation
from minkgh.models import unipotent_isometry


def test_format_word() -> None:
    assert format_word(()) == "id"
    assert format_word((1, -2)) == "g0 g1^-1"


def test_relation_letters_are_checked() -> None:
    with pytest.raises(InputValidationError):
        GroupSpec((boost(3, 1.0),), ((2,),))


def test_from_records_checks_relations() -> None:
    quarter = rotation_matrix(3, np.pi / 2).tolist()
    spec = GroupSpec.from_records([{"L": quarter, "tau": [0, 0, 0]}], [[1, 1, 1, 1]])
    assert spec.relation_residuals()[0] < 1e-12
    with pytest.raises(RelationResidualError):
        GroupSpec.from_records([{"L": quarter, "tau": [0, 0, 0]}], [[1, 1, 1]])


def test_enumeration_counts(schottky) -> None:
    cyclic = GroupSpec((boost(3, 1.0),))
    assert len(enumerate_words(cyclic, 3)) == 6
    assert len(enumerate_words(schottky, 2)) == 16
    finite = GroupSpec((rotation(3, np.pi / 2),), ((1, 1, 1, 1),))
    assert len(enumerate_words(finite, 4)) == 3


def test_enumeration_is_shortest_first(schottky) -> None:
    words = [item.word for item in enumerate_words(schottky, 3)]
    assert [len(word) for word in words] == sorted(len(word) for word in words)
    assert () not in words
    for item in enumerate_words(schottky, 2):
        assert np.allclose(evaluate_word(schottky, item.word).L, item.element.L)


def test_enumeration_cap(schottky) -> None:
    with pytest.raises(EnumerationLimitError):
        enumerate_words(schottky, 2, max_elements=5)


def test_cyclic_boost_limit_planes() -> None:
    g = boost(3, 1.0)
    limit = limit_set_approx(GroupSpec((g,)), 3)
    assert sorted(item.word for item in limit.data) == [(-1,), (1,)]
    assert all(abs(item.plane.s) < 1e-12 for item in limit.data)
    first, second = (item.plane for item in limit.data)
    assert np.max(np.abs(first.v - second.v)) > 0.5
    assert plane_fixed_residual(g, first) < 1e-10
    assert plane_fixed_residual(g, second) < 1e-10


def test_repeated_elements_give_the_same_planes(schottky) -> None:
    elements = enumerate_words(schottky, 4)
    single = limit_set_approx(schottky, 4, elements=elements)
    doubled = limit_set_approx(schottky, 4, elements=elements + elements[::-1])
    assert len(doubled.data) == len(single.data)
    assert [item.word for item in doubled.data] == [item.word for item in single.data]


def test_limit_planes_are_fixed(schottky) -> None:
    limit = limit_set_approx(schottky, 3)
    assert not limit.nonloxodromic
    for item in limit.data:
        assert plane_fixed_residual(evaluate_word(schottky, item.word), item.plane) < 1e-8
        assert 0 < item.contraction < 1


def test_translations_are_nonloxodromic() -> None:
    spec = GroupSpec((translation([0.0, 1.0, 0.0]), translation([0.0, 0.0, 1.0])))
    assert limit_set_approx(spec, 3).nonloxodromic
    assert admissibility(spec, 3).status is AdmissibilityStatus.NONLOXODROMIC


def test_linear_schottky_is_admissible(schottky) -> None:
    future = admissibility(schottky, 3)
    assert future.status is AdmissibilityStatus.FEASIBLE
    assert future.margin > 0
    past = admissibility(schottky, 3, orientation=DomainOrientation.PAST)
    assert past.status is AdmissibilityStatus.FEASIBLE
    assert past.witness[0] < 0


def test_timelike_translation_obstructs() -> None:
    result = admissibility(GroupSpec((translation([1.0, 0.0, 0.0]),)), 2)
    assert result.status is AdmissibilityStatus.INFEASIBLE
    assert result.obstruction == (1,)


def test_refinement_plane_counts_grow(schottky) -> None:
    curve = refinement_curve(schottky, [1, 2, 3, 4])
    counts = [row["planes"] for row in curve]
    assert counts == sorted(counts)
    assert [row["depth"] for row in curve] == [1, 2, 3, 4]


def test_three_punctured_sphere_words() -> None:
    words = [item.word for item in enumerate_words(three_punctured_sphere(), 2)]
    assert (-3,) in words
    # a b = c^-1 is already listed as a single letter
    assert (1, 2) not in words


def test_elementary_groups(schottky) -> None:
    rotations = GroupSpec((rotation(3, 0.4), rotation(3, 1.1)))
    assert is_elementary(rotations).kind is ElementaryKind.FIXED_POINT_INTERIOR
    parabolics = GroupSpec((unipotent_isometry([0.0], [1.0], 0.0), unipotent_isometry([0.0], [2.0], 0.0)))
    result = is_elementary(parabolics)
    assert result.kind is ElementaryKind.FIXED_ISOTROPIC_DIRECTION
    assert result.direction[0] > 0
    assert not is_elementary(schottky).elementary
