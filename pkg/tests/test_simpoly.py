import math

import numpy as np
import pytest

from lhvcert.blochcore import QubitPovm, RealQubitOperator, trine_povm, zeta, depolarize, DomainError
from lhvcert.simpoly import (
    decompose_trine,
    export_facets_csv,
    export_vertices_csv,
    facet_affine_rank,
    facet_matrix,
    facet_shrink_eta,
    membership,
    povm_to_coords,
    projective_binary,
    rank_one_ternary,
    shrink_eta_for,
    ShrinkLP,
    vertex_matrix,
)

ETA2 = math.sqrt(3) - 1


def extremal_povm(rng):
    if rng.random() < 0.3:
        return projective_binary(rng.uniform(0, math.pi)).permuted(rng.permutation(3))
    while True:
        p = rank_one_ternary(np.sort(rng.uniform(0, 2 * math.pi, 3)))
        if p is not None:
            return p


def random_povm(rng):
    """Mixture of two extremal POVMs, randomly depolarized (full support)."""
    a, b = extremal_povm(rng), extremal_povm(rng)
    w = rng.uniform(0.05, 0.95)
    mix = QubitPovm(tuple(w * x + (1 - w) * y for x, y in zip(a, b)))
    return depolarize(mix, rng.uniform(0.85, 1.0), zeta(rng.uniform(0, 1)))


class TestDecomposeTrine:
    def test_boundary_feasible(self):
        strat = decompose_trine(ETA2)
        assert strat is not None
        for x, p in enumerate(trine_povm(ETA2)):
            rec = strat.reconstruct(x)
            assert np.max(np.abs(rec.coords() - p[0].coords())) <= 1e-10

    def test_just_above_infeasible(self):
        assert decompose_trine(0.7330) is None

    def test_zero(self):
        strat = decompose_trine(0.0)
        np.testing.assert_allclose(strat.noise, 1.0)

    def test_probabilities(self):
        strat = decompose_trine(0.67)
        np.testing.assert_allclose(strat.choice.sum(axis=1) + strat.noise, 1.0)
        assert (strat.choice >= 0).all() and (strat.response >= 0).all()
        np.testing.assert_allclose(strat.response.sum(axis=2), 1.0)

    def test_threshold_by_bisection(self):
        lo, hi = 0.0, 1.0
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if decompose_trine(mid) is not None else (lo, mid)
        assert lo == pytest.approx(ETA2, abs=1e-6)

    def test_domain(self):
        with pytest.raises(DomainError):
            decompose_trine(-0.1)


class TestVertices:
    def test_count_and_distinct(self, vertices):
        assert len(vertices) == 81
        v = vertex_matrix(vertices)
        assert len({tuple(np.round(r, 12)) for r in v}) == 81

    def test_degenerate_vertex(self, vertices):
        np.testing.assert_allclose(vertices[0].coords, [2, 0, 0, 0, 0, 0])

    def test_binary_permutations_distinct(self, vertices):
        rows = [tuple(np.round(v.coords, 12)) for v in vertices if v.base == 0]
        assert len(rows) == 6 and len(set(rows)) == 6

    def test_valid_povms(self, vertices):
        assert all(v.povm().is_valid() for v in vertices)


class TestMembership:
    def test_vertex_weight_one(self, vertices):
        w, cert = membership(vertices[40].povm(), vertices)
        assert cert is None
        np.testing.assert_allclose(vertex_matrix(vertices).T @ w, vertices[40].coords, atol=1e-9)
        assert w.sum() == pytest.approx(1.0)

    def test_trivial_povm(self, vertices):
        q = [0.2, 0.5, 0.3]
        triv = QubitPovm(tuple(RealQubitOperator(2 * qb) for qb in q))
        w, cert = membership(triv, vertices)
        assert cert is None
        v = vertex_matrix(vertices)
        np.testing.assert_allclose(v.T @ w, povm_to_coords(triv), atol=1e-9)
        # the degenerate vertices alone already reproduce it with weights q
        np.testing.assert_allclose(v[:3].T @ np.array(q), povm_to_coords(triv), atol=1e-15)

    def test_separation_certificate(self, vertices):
        p = projective_binary(math.pi / 18)  # between two of Bob's axes
        w, (f, c) = membership(p, vertices)
        assert w is None
        assert (vertex_matrix(vertices) @ f <= c + 1e-9).all()
        assert f @ povm_to_coords(p) > c

    def test_worst_case_boundary(self, vertices, shrink_lp_route):
        res = shrink_lp_route[0.0]
        inside = depolarize(res.worst, res.eta_b - 1e-6, zeta(0.0))
        outside = depolarize(res.worst, min(res.eta_b + 1e-4, 1.0), zeta(0.0))
        assert membership(inside, vertices)[0] is not None
        assert membership(outside, vertices)[0] is None


class TestShrinkEta:
    def test_vertex_and_trivial(self, vertices):
        assert shrink_eta_for(vertices[20].povm(), zeta(0.0), vertices) == pytest.approx(1.0)
        triv = QubitPovm((RealQubitOperator(1.0), RealQubitOperator(1.0), RealQubitOperator(0.0)))
        assert shrink_eta_for(triv, zeta(5 / 6), vertices) == pytest.approx(1.0)

    def test_quasi_concave(self, vertices, rng):
        lp = ShrinkLP(vertices, zeta(0.0))
        for _ in range(100):
            a, b = random_povm(rng), random_povm(rng)
            mid = QubitPovm(tuple(0.5 * (x + y) for x, y in zip(a, b)))
            assert min(lp(a), lp(b)) <= lp(mid) + 1e-9

    def test_min_property(self, vertices, shrink_lp_route, rng):
        lp = ShrinkLP(vertices, zeta(0.0))
        for _ in range(200):
            assert shrink_lp_route[0.0].eta_b <= lp(random_povm(rng)) + 1e-9

    def test_rank_one_ternary_rejects_half_plane(self):
        assert rank_one_ternary([0.0, 0.1, 0.2]) is None
        p = rank_one_ternary([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
        assert p.is_valid()
        assert all(e.t == pytest.approx(2 / 3) for e in p)


class TestShrinkFactor:
    def test_alpha_zero(self, shrink_lp_route):
        assert shrink_lp_route[0.0].eta_b == pytest.approx(0.9268, abs=2e-3)

    def test_alpha_five_sixths(self, shrink_lp_route):
        assert shrink_lp_route[5 / 6].eta_b == pytest.approx(0.8900, abs=2e-3)

    def test_regime(self, shrink_lp_route):
        assert all(0.85 < r.eta_b < 1 for r in shrink_lp_route.values())

    def test_facet_route_agrees(self, shrink_lp_route, shrink_facet_route):
        for a in (0.0, 5 / 6):
            assert shrink_facet_route[a] == pytest.approx(shrink_lp_route[a].eta_b, abs=1e-6)


class TestFacets:
    def test_valid_and_tight(self, vertices, facet_list):
        assert len(facet_list) > 0
        v = vertex_matrix(vertices)
        n, c = facet_matrix(facet_list)
        assert (v @ n.T <= c + 1e-9).all()
        assert all(facet_affine_rank(f, vertices) >= 6 for f in facet_list)

    def test_dual_consistency(self, vertices, facet_list, rng):
        n, c = facet_matrix(facet_list)
        agree = 0
        for _ in range(1000):
            p = random_povm(rng)
            x = povm_to_coords(p)
            slack = np.max(n @ x - c)
            if abs(slack) < 1e-7:
                continue  # too close to the boundary to be decisive
            in_lp = membership(p, vertices)[0] is not None
            assert in_lp == (slack < 0)
            agree += 1
        assert agree > 900

    def test_facet_eta_matches_lp(self, vertices, facet_list, rng):
        lp = ShrinkLP(vertices, zeta(5 / 6))
        for _ in range(50):
            p = random_povm(rng)
            assert facet_shrink_eta(p, zeta(5 / 6), facet_list) == pytest.approx(lp(p), abs=1e-7)

    def test_exports(self, vertices, facet_list, tmp_path):
        export_vertices_csv(vertices, tmp_path / "v.csv")
        export_facets_csv(facet_list, tmp_path / "f.csv")
        v_lines = (tmp_path / "v.csv").read_text().splitlines()
        f_lines = (tmp_path / "f.csv").read_text().splitlines()
        assert len(v_lines) == 82 and len(f_lines) == len(facet_list) + 1
