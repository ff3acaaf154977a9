import numpy as np
import pytest

from warpcurv import PhaseState, build_metric, integrate
from warpcurv.errors import ArgumentError, DimensionError, MetricError
from warpcurv.tensor import DIFFERENCE_TOL, bochner_residual, curvature_at
from warpcurv.warped import (
    WarpedProductSpec,
    appendix_nabla_ricci,
    appendix_ricci,
    assemble_metric,
    assemble_metric_difference,
    bumpy_surface_chart,
    condition_residuals,
    constant_warping,
    construction_as_warped,
    exp_quadratic_warping,
    flat_chart,
    hyperbolic2_chart,
    interval_base,
    random_desk_point,
    random_desk_spec,
    ridge_warping,
    spec_from_dict,
    sphere2_chart,
    warhc_check,
)


@pytest.fixture(scope="module")
def desk_specs():
    rng = np.random.default_rng(2024)
    return [(spec, random_desk_point(spec, rng)) for spec in (random_desk_spec(rng) for _ in range(12))]


@pytest.fixture(scope="module")
def construction3():
    traj = integrate(PhaseState([1.0, -0.5], [0.7, 1.2]), 0.0, (-0.2, 0.2))
    return build_metric(traj)


def sphere_spec():
    return WarpedProductSpec(interval_base(), flat_chart(1), ridge_warping("cos", [1.0]), 0.0, "sphere")


class TestAssembly:
    def test_block_structure(self, desk_specs):
        for spec, x in desk_specs:
            G = assemble_metric(spec).g(x)
            assert np.all(G[: spec.m, spec.m :] == 0) and np.all(G[spec.m :, : spec.m] == 0)
            phi = spec.warping.value(x[: spec.m])
            np.testing.assert_allclose(G[spec.m :, spec.m :], phi**2 * spec.fiber.g(x[spec.m :]), rtol=1e-15)

    def test_composed_derivatives_match_differences(self, desk_specs):
        for spec, x in desk_specs[:4]:
            a, d = assemble_metric(spec), assemble_metric_difference(spec)
            np.testing.assert_allclose(a.dg(x), d.dg(x), atol=1e-8)
            np.testing.assert_allclose(a.d2g(x), d.d2g(x), atol=1e-6)

    def test_sphere(self):
        chart = assemble_metric(sphere_spec())
        for t in np.linspace(-1.2, 1.2, 5):
            assert curvature_at(chart, np.array([t, 0.4])).scalar == pytest.approx(2.0, abs=1e-10)

    def test_nonpositive_warping(self):
        spec = WarpedProductSpec(interval_base(), flat_chart(1), ridge_warping("sinh", [1.0]), 0.0)
        with pytest.raises(MetricError):
            assemble_metric(spec).g(np.array([-0.5, 0.0]))

    def test_point_dimension(self):
        with pytest.raises(DimensionError):
            sphere_spec().split(np.zeros(3))

    def test_construction_block_comparison(self, construction3):
        spec = construction_as_warped(construction3)
        x = construction3.point(0.1)
        np.testing.assert_allclose(assemble_metric(spec).g(x), construction3.metric_chart().g(x), rtol=1e-15)
        np.testing.assert_allclose(assemble_metric(spec).d2g(x), construction3.metric_chart().d2g(x), rtol=1e-13)


class TestAppendixRicci:
    def test_product(self):
        spec = WarpedProductSpec(hyperbolic2_chart(), sphere2_chart(), constant_warping(1.0, 2), 1.0)
        x = np.array([0.3, 0.1, 1.0, 0.2])
        R = appendix_ricci(spec, x)
        np.testing.assert_allclose(R[:2, :2], curvature_at(spec.base, x[:2]).ricci, atol=1e-14)
        np.testing.assert_allclose(R[2:, 2:], curvature_at(spec.fiber, x[2:]).ricci, atol=1e-14)
        assert np.all(R[:2, 2:] == 0)
        assert np.max(np.abs(appendix_nabla_ricci(spec, x))) <= 1e-12

    def test_sphere_eigenvalues(self):
        spec = sphere_spec()
        x = np.array([0.5, 0.0])
        R = appendix_ricci(spec, x)
        op = np.linalg.solve(assemble_metric(spec).g(x), R)
        np.testing.assert_allclose(np.linalg.eigvals(op), [1.0, 1.0], atol=1e-12)

    def test_exponential_warping(self):
        spec = WarpedProductSpec(interval_base(), flat_chart(2), ridge_warping("exp", [1.0]), 0.0)
        t = 0.7
        R = appendix_ricci(spec, np.array([t, 0.1, -0.2]))
        assert R[0, 0] == pytest.approx(-2.0)
        np.testing.assert_allclose(R[1:, 1:], -2 * np.exp(2 * t) * np.eye(2), rtol=1e-14)

    def test_engine_agreement(self, desk_specs):
        for spec, x in desk_specs:
            rep = curvature_at(assemble_metric(spec), x)
            assert np.max(np.abs(appendix_ricci(spec, x) - rep.ricci)) < 1e-10
            assert np.max(np.abs(appendix_nabla_ricci(spec, x) - rep.nabla_ricci)) < 1e-9
            assert np.max(np.abs(rep.ricci[: spec.m, spec.m :])) < 1e-10

    def test_difference_engine_agreement(self, desk_specs):
        for spec, x in desk_specs[:6]:
            rep = curvature_at(assemble_metric_difference(spec), x)
            assert np.max(np.abs(appendix_ricci(spec, x) - rep.ricci)) < DIFFERENCE_TOL
            assert np.max(np.abs(appendix_nabla_ricci(spec, x) - rep.nabla_ricci)) < DIFFERENCE_TOL

    def test_construction_vanishing_components(self, construction3):
        spec = construction_as_warped(construction3)
        nabla = appendix_nabla_ricci(spec, construction3.point(0.05))
        m = spec.m
        assert np.all(nabla[m:, :m, :m] == 0)
        assert np.all(nabla[:m, m:, :m] == 0) and np.all(nabla[:m, :m, m:] == 0)

    def test_fiber_eigenspace(self, desk_specs):
        # with an Einstein fiber the fiber directions span a Ricci eigenspace
        for spec, x in desk_specs:
            if spec.kappa is None or spec.p < 2:
                continue
            G = assemble_metric(spec).g(x)
            op = np.linalg.solve(G, appendix_ricci(spec, x))[spec.m :, spec.m :]
            np.testing.assert_allclose(op, op[0, 0] * np.eye(spec.p), atol=1e-10)


class TestConditions:
    def test_construction_metric(self, construction3):
        spec = construction_as_warped(construction3)
        rep = warhc_check(spec, [construction3.point(t) for t in (-0.1, 0.0, 0.1)])
        assert all(rep.flags.values()) and rep.consistent
        assert max(rep.residual_a, rep.residual_b, rep.residual_c, rep.residual_e) < 1e-6

    @pytest.mark.parametrize("component, violated", [(0, {"b"}), (1, {"c", "e"})])
    def test_perturbed_construction(self, construction3, component, violated):
        dydd = np.zeros(2)
        dydd[component] = 0.05
        chart = construction3.perturbed(0.05, dydd=dydd)
        rep = warhc_check(construction_as_warped(chart), [chart.point(0.05)])
        failing = {k for k, ok in rep.flags.items() if not ok}
        assert failing == violated | {"harmonic"}
        assert rep.consistent

    def test_non_einstein_fiber(self):
        spec = WarpedProductSpec(interval_base(), bumpy_surface_chart(), ridge_warping("exp", [1.0]), 0.0)
        rep = warhc_check(spec, [[0.2, 0.5, 0.1], [-0.3, 1.0, 0.0]])
        assert {k for k, ok in rep.flags.items() if not ok} == {"a", "harmonic"}
        assert rep.consistent

    def test_constant_warping_flat_fiber(self):
        spec = WarpedProductSpec(flat_chart(2), flat_chart(1), constant_warping(3.0, 2), 0.0)
        ra, rb, rc, re = condition_residuals(spec, np.array([0.1, 0.2, 0.3]))
        assert ra == rb == rc == re == 0

    def test_c_and_e_vanish_together(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            spec = random_desk_spec(rng)
            spec = WarpedProductSpec(spec.base, flat_chart(1), spec.warping, 0.0)
            x = random_desk_point(spec, rng)
            _, _, rc, re = condition_residuals(spec, x)
            assert (rc < 1e-6) == (re < 1e-6)
            assert bochner_residual(spec.base, spec.warping, x[: spec.m]) < 1e-6

    def test_requires_kappa(self):
        spec = WarpedProductSpec(interval_base(), bumpy_surface_chart(), ridge_warping("exp", [1.0]), None)
        with pytest.raises(ArgumentError):
            condition_residuals(spec, np.zeros(3))

    def test_report_serialization(self, construction3):
        rep = warhc_check(construction_as_warped(construction3), [construction3.point(0.0)])
        d = rep.to_dict()
        assert set(d["residuals"]) == {"a", "b", "c", "e"} and d["points"] == 1


class TestSpecDocuments:
    def test_catalog_spec(self):
        spec = spec_from_dict(
            {
                "base": {"kind": "interval", "dim": 1},
                "fiber": {"kind": "sphere2", "dim": 2},
                "warping": {"kind": "cosh", "params": {"w": [0.5], "c": 0.1}},
                "name": "demo",
            }
        )
        assert (spec.m, spec.p, spec.kappa, spec.name) == (1, 2, 1.0, "demo")

    def test_table_and_quadratic(self):
        spec = spec_from_dict(
            {
                "base": {"table": [[2.0, 0.0], [0.0, 1.0]]},
                "fiber": {"kind": "flat", "dim": 1, "kappa": 0.0},
                "warping": {"kind": "exp_quadratic", "params": {"A": [[0.1, 0], [0, 0.2]], "b": [0.0, 0.1]}},
            }
        )
        x = np.array([0.2, -0.1, 0.0])
        rep = curvature_at(assemble_metric(spec), x)
        np.testing.assert_allclose(appendix_ricci(spec, x), rep.ricci, atol=1e-10)

    @pytest.mark.parametrize(
        "doc, error",
        [
            ({"base": {"kind": "torus"}, "fiber": {"kind": "flat"}, "warping": {"kind": "exp"}}, ArgumentError),
            ({"base": {"kind": "interval"}, "warping": {"kind": "exp"}}, ArgumentError),
            ({"base": {"kind": "interval"}, "fiber": {"kind": "flat"}, "warping": {"kind": "tan"}}, ArgumentError),
            ({"base": {"kind": "sphere2", "dim": 3}, "fiber": {"kind": "flat"}, "warping": {"kind": "exp"}}, DimensionError),
            (
                {"base": {"kind": "interval"}, "fiber": {"kind": "flat"}, "warping": {"kind": "exp", "params": {"w": [1, 2]}}},
                DimensionError,
            ),
        ],
    )
    def test_invalid(self, doc, error):
        with pytest.raises(error):
            spec_from_dict(doc)

    def test_exp_quadratic_derivatives(self):
        phi = exp_quadratic_warping([[0.3, 0.1], [0.1, -0.2]], [0.2, 0.4], 0.1)
        from warpcurv.tensor import ScalarField

        ref = ScalarField(value=phi.value).derivatives(np.array([0.3, -0.5]))
        got = phi.derivatives(np.array([0.3, -0.5]))
        for a, b, tol in zip(got, ref, (0, 1e-9, 1e-7, 1e-5)):
            np.testing.assert_allclose(a, b, atol=tol)
