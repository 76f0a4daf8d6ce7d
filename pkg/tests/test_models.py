from __future__ import annotations

import numpy as np
import pytest

from minkgh.convex_domain import cosmological_time, misner_lambda
from minkgh.errors import ConstructionFailure, ModelParameterError, OutsideDomainError, SymExtInputError
from minkgh.kleinian import AdmissibilityStatus, GroupSpec, schottky_spec
from minkgh.minkowski import eta, mink_norm2, rotation
from minkgh.models import (
    AmbientPresentation,
    EscapePath,
    ExtensionCase,
    SymExtProblem,
    build_misner,
    build_translation,
    build_unipotent,
    from_null,
    limits_allowed,
    radiant_standard,
    richardson_limit,
    surface_completeness_probe,
    symmetric_extension,
    to_null,
    twisted_product,
    validate_presentation,
)


def test_null_coordinates(rng) -> None:
    p = rng.normal(size=4)
    coords = to_null(p)
    assert np.allclose(from_null(coords), p)
    assert mink_norm2(p) == pytest.approx(2.0 * coords[0] * coords[1] + float(coords[2:] @ coords[2:]))


# translation spacetimes


def test_translation_model_leaves() -> None:
    model = build_translation([[0.0, 1.0, 0.0]])
    u = model.time_direction()
    assert mink_norm2(u) == pytest.approx(-1.0)
    assert u[0] > 0
    assert model.leaf_contains(1.0, [1.0, 7.0, 0.0])
    assert not model.leaf_contains(1.0, [2.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "translations",
    [
        [[0.0, 1.0, 0.0], [0.0, 2.0, 0.0]],
        [[1.0, 0.0, 0.0]],
        [[1.0, 1.0, 0.0]],
        [[0.0, 1.0]],
    ],
)
def test_translation_model_rejections(translations) -> None:
    with pytest.raises(ModelParameterError):
        build_translation(translations)


# Misner spacetimes


def test_misner_time_matches_domain(rng) -> None:
    model = build_misner(0.3, [(0.0, [1.0])])
    lam = misner_lambda(3)
    for p in model.sample_points(6, rng):
        assert model.in_omega(p)
        assert model.cosmological_time(p) == pytest.approx(cosmological_time(lam, p).T, rel=1e-9)


def test_misner_chart(rng) -> None:
    model = build_misner(0.3, [(0.1, [1.0])])
    element = model.elements()[1]
    g = element.isometry(3)
    for p in model.sample_points(5, rng):
        chart = model.chart(p)
        assert np.allclose(model.from_chart(chart), p)
        assert np.allclose(model.chart(g(p)), model.chart_action(element, chart))
        assert model.cosmological_time(p) == pytest.approx(np.sqrt(2.0) * np.exp(chart[0]))
    with pytest.raises(OutsideDomainError):
        model.chart([0.0, 1.0, 0.0])


def test_misner_group_is_abelian_and_acausal(rng) -> None:
    model = build_misner(0.3, [(0.0, [1.0])])
    assert model.commutator_residual() < 1e-12
    report = model.achronality_check(model.sample_points(4, rng), qmax=50)
    assert report["checked"] == 8
    assert report["outside"] == 0
    assert report["indeterminate"] == 0


def test_misner_rejections() -> None:
    with pytest.raises(ModelParameterError):
        build_misner(0.0)
    with pytest.raises(ModelParameterError):
        build_misner(0.3, [(0.0, [0.0])])


# unipotent spacetimes


@pytest.fixture
def unipotent():
    return build_unipotent([1.0], component_index=1)


def test_unipotent_interval(unipotent) -> None:
    assert unipotent.interval == (-1.0, np.inf)
    assert unipotent.base_height == 0.0
    assert unipotent.in_omega(from_null([0.0, 0.5, 0.0]))
    assert not unipotent.in_omega(from_null([0.0, -2.0, 0.0]))
    with pytest.raises(OutsideDomainError):
        unipotent.surface_point(-2.0, [0.0])


def test_unipotent_group_law(unipotent) -> None:
    assert unipotent.group_law_residual([0.7], [-1.3]) < 1e-12
    flat = build_unipotent([0.0, 0.0], check_profile=True)
    assert flat.group_law_residual([0.5, 1.0], [2.0, -1.0]) < 1e-12


def test_cauchy_surface_is_invariant(unipotent, rng) -> None:
    for y, z in ((0.5, [0.3]), (3.0, [-1.0]), (-0.5, [0.2])):
        assert unipotent.invariance_residual(y, z, [rng.normal()]) < 1e-8
    assert unipotent.free_action_gap([unipotent.surface_point(0.5, [0.3])]) > 0


def test_induced_metric_is_the_pullback(unipotent) -> None:
    y, z, h = 0.5, np.array([0.3]), 1e-5
    columns = []
    for direction in np.eye(2):
        forward = unipotent.surface_point(y + h * direction[0], z + h * direction[1:])
        backward = unipotent.surface_point(y - h * direction[0], z - h * direction[1:])
        columns.append((forward - backward) / (2.0 * h))
    J = np.column_stack(columns)
    assert np.allclose(J.T @ eta(3) @ J, unipotent.induced_metric(y, z), atol=1e-6)


def test_zeta_coordinates(unipotent) -> None:
    zeta = unipotent.to_zeta(0.5, [0.3])
    assert np.allclose(unipotent.from_zeta(0.5, zeta), [0.3])
    assert unipotent.zeta_metric(0.5)[1, 1] == pytest.approx(1.5 ** 2)


def test_surface_completeness(unipotent) -> None:
    reports = surface_completeness_probe(unipotent)
    assert len(reports) == 2
    assert all(report["divergent"] for report in reports)
    inner = surface_completeness_probe(unipotent, [EscapePath(0.0, 1.0, np.zeros(1))])
    assert not inner[0]["divergent"]
    assert inner[0]["length"] > 0


def test_unipotent_rejections() -> None:
    with pytest.raises(ModelParameterError):
        build_unipotent([1.0, 0.0])
    with pytest.raises(ModelParameterError):
        build_unipotent([1.0], component_index=2)
    with pytest.raises(ModelParameterError):
        build_unipotent([0.0, 0.0], lattice=[[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ModelParameterError):
        build_unipotent([1.0], component_index=1, a_profile=lambda y: 0.5)
    # constant a integrates to a finite length toward the pole
    with pytest.raises(ModelParameterError):
        build_unipotent([1.0], component_index=1, a_profile=lambda y: 1.5)


def test_profile_with_integrable_singularity_is_rejected() -> None:
    # a^2 diverges logarithmically at y = 1 but a itself is integrable there
    def profile(y: float) -> float:
        return 1.0 + 1.0 / np.sqrt(y - 1.0)

    with pytest.raises(ModelParameterError, match="integral of a converges"):
        build_unipotent([-1.0], component_index=1, a_profile=profile)
    model = build_unipotent([-1.0], component_index=1, a_profile=profile, check_profile=False)
    assert model.interval == (1.0, np.inf)
    toward_pole, outward = surface_completeness_probe(model)
    assert not toward_pole["divergent"]
    assert toward_pole["length"] < 10.0
    assert outward["divergent"]


# symmetric extension


def _problem(basis, T, case, bound) -> SymExtProblem:
    return SymExtProblem(np.asarray(basis, dtype=float), np.asarray(T, dtype=float), ExtensionCase(case), bound)


def test_extension_on_whole_space() -> None:
    T = np.array([[0.5, 0.1], [0.1, 0.2]])
    result = symmetric_extension(_problem(np.eye(2), T, "bounded", 1.0))
    assert result.branch == "direct"
    assert np.allclose(result.operator, T)


def test_extension_direct_branch() -> None:
    basis = np.array([[1.0], [0.0], [0.0]])
    T = np.array([[0.3], [0.4], [0.0]])
    result = symmetric_extension(_problem(basis, T, "bounded", 1.0))
    assert result.branch == "direct"
    assert result.symmetry_residual < 1e-12
    assert result.restriction_residual < 1e-12
    assert result.bound_margin >= -1e-8


def test_extension_shrink_limit() -> None:
    result = symmetric_extension(_problem([[1.0], [0.0]], [[1.0], [0.0]], "bounded", 1.0))
    assert result.branch == "shrink_limit"
    assert np.allclose(result.operator, np.diag([1.0, 0.0]))
    assert result.limit_gap is not None


def test_extension_future_infinite() -> None:
    result = symmetric_extension(_problem([[1.0], [0.0]], [[1.0], [0.0]], "future_infinite", -0.5))
    assert result.branch == "kernel_image"
    assert np.allclose(result.operator, np.diag([1.0, 0.0]))


def test_extension_with_kernel() -> None:
    basis = np.eye(3)[:, :2]
    T = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    result = symmetric_extension(_problem(basis, T, "future_infinite", -0.5))
    assert np.allclose(result.operator, np.diag([1.0, 0.0, 0.0]))
    assert result.restriction_residual < 1e-12


@pytest.mark.parametrize(
    "basis, T, case, bound",
    [
        (np.eye(2), [[0.0, 1.0], [0.0, 0.0]], "bounded", 1.0),
        (np.eye(2), [[2.0, 0.0], [0.0, 2.0]], "bounded", 1.0),
        ([[1.0], [0.0]], [[1.0], [0.0]], "future_infinite", 0.5),
        ([[2.0], [0.0]], [[1.0], [0.0]], "bounded", 1.0),
    ],
)
def test_extension_input_errors(basis, T, case, bound) -> None:
    with pytest.raises(SymExtInputError):
        symmetric_extension(_problem(basis, T, case, bound))


def test_limits_allowed() -> None:
    zero = _problem(np.eye(2), np.zeros((2, 2)), "bounded", 1.0)
    assert limits_allowed(zero, -np.inf, np.inf)
    nonzero = _problem(np.eye(2), np.diag([0.5, 0.0]), "bounded", 1.0)
    assert not limits_allowed(nonzero, -np.inf, np.inf)
    assert limits_allowed(nonzero, -1.0, 1.0)


def test_richardson_limit_recovers_polynomial_value() -> None:
    steps = [0.5 ** j for j in range(1, 7)]
    values = [np.array([[2.0 + 3.0 * h - h ** 2 + 0.5 * h ** 4]]) for h in steps]
    assert richardson_limit(values)[0, 0] == pytest.approx(2.0, abs=1e-12)
    assert richardson_limit([np.ones((2, 2))]).shape == (2, 2)


def test_shrink_limit_rejects_slow_convergence() -> None:
    # kept eigenvalue 0.999 puts the pole of the shrunk family next to s = 1
    basis = np.eye(3)[:, :2]
    T = np.array([[1.0, 0.0], [0.0, 0.999], [0.0, 0.04]])
    with pytest.raises(ConstructionFailure, match="do not converge"):
        symmetric_extension(_problem(basis, T, "bounded", 1.0))


def _random_extension_problem(rng: np.random.Generator, case: str, unit_norm: bool):
    m = int(rng.integers(2, 6))
    k = int(rng.integers(1, min(3, m) + 1))
    if unit_norm and k == m:
        m += 1
    frame, _ = np.linalg.qr(rng.normal(size=(m, m)))
    Q_E, Q_perp = frame[:, :k], frame[:, k:]
    if case == "bounded" and unit_norm:
        W, _ = np.linalg.qr(rng.normal(size=(k, k)))
        mu = np.concatenate([[1.0], rng.uniform(-0.25, 0.25, size=k - 1)])
        S = W @ np.diag(mu) @ W.T
        C = rng.normal(size=(m - k, k)) @ W @ np.diag(np.concatenate([[0.0], np.ones(k - 1)])) @ W.T
        norm = np.linalg.norm(C, 2)
        C = 0.5 * C / norm if norm > 0 else C
        bound = float(rng.uniform(0.5, 2.0))
        return _problem(Q_E, (Q_E @ S + Q_perp @ C) / bound, case, bound)
    if case == "bounded":
        S = rng.normal(size=(k, k))
        T = Q_E @ (S + S.T) + Q_perp @ rng.normal(size=(m - k, k))
        return _problem(Q_E, 0.7 * T / np.linalg.norm(T, 2), case, 1.0)
    U, _ = np.linalg.qr(rng.normal(size=(m, m)))
    spectrum = rng.uniform(0.1, 1.5, size=m)
    if case == "past_infinite":
        spectrum = -spectrum
    full = U @ np.diag(spectrum) @ U.T
    return _problem(Q_E, full @ Q_E, case, -0.5 if case == "future_infinite" else 0.5)


@pytest.mark.slow
def test_random_extensions_meet_case_bounds() -> None:
    rng = np.random.default_rng(7)
    cases = ("bounded", "future_infinite", "past_infinite")
    for index in range(200):
        case = cases[index % 3]
        unit_norm = case == "bounded" and index % 2 == 0
        problem = _random_extension_problem(rng, case, unit_norm)
        result = symmetric_extension(problem)
        assert result.symmetry_residual < 1e-10
        assert result.restriction_residual < 1e-10
        assert result.bound_margin >= -1e-8
        if unit_norm:
            assert result.branch == "shrink_limit"
            assert result.limit_gap <= 1e-8


# radiant and twisted models


def test_radiant_model(rng) -> None:
    model = radiant_standard(schottky_spec(3))
    assert model.cosmological_time([2.0, 0.3, 0.1]) == pytest.approx(np.sqrt(3.9))
    points = model.level_sample(1.0, 5, rng, spread=0.5)
    assert model.invariance_residual(points) < 1e-9
    pairs = [(points[0], points[1]), (points[2], points[3])]
    assert model.level_distance_ratio(pairs, 1.0, 2.0) == pytest.approx(2.0)
    assert model.admissibility(3).status is AdmissibilityStatus.FEASIBLE
    with pytest.raises(OutsideDomainError):
        model.cosmological_time([0.0, 1.0, 0.0])


def test_radiant_rejections() -> None:
    with pytest.raises(ModelParameterError):
        radiant_standard(schottky_spec(3, taus=[[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(ModelParameterError):
        radiant_standard(GroupSpec((rotation(3, 0.4), rotation(3, 1.1))))


def test_twisted_product(rng) -> None:
    base = build_misner(0.3)
    product = twisted_product("misner", base.generators(), 1, [([[1.0]], [0.5])])
    assert product.dim == 4
    assert not product.linear
    holonomy = product.holonomy()
    assert holonomy.dim == 4
    assert product.descriptor()["metric"] == "g_misner + euclidean(R^1)"

    samples = np.hstack([base.sample_points(4, rng), rng.normal(size=(4, 1))])
    presentation = AmbientPresentation(
        holonomy,
        np.eye(4)[:, :3],
        lambda p: base.in_omega(p[:3]),
        samples,
        fiber_basis=np.eye(4)[:, 3:],
    )
    report = validate_presentation(presentation, product, rng)
    assert report["valid"]
    assert report["U_timelike"]
    assert report["monodromy_residual"] < 1e-12


def test_twisted_product_rejections() -> None:
    generators = build_misner(0.3).generators()
    with pytest.raises(ModelParameterError):
        twisted_product("misner", generators, 0, [])
    with pytest.raises(ModelParameterError):
        twisted_product("misner", generators, 1, [])
    with pytest.raises(ModelParameterError):
        twisted_product("misner", generators, 1, [([[2.0]], [0.0])])
