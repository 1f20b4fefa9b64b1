import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from lhvcert.analytic import theta_star
from lhvcert.blochcore import (
    DomainError,
    TwoQubitState,
    Vec2,
    behavior,
    binary_povm,
    partial_trace,
    pauli_pair,
    schmidt_state,
    trine_povm,
    zeta,
)
from lhvcert.lhvlp import (
    SHRINK,
    LocalModel,
    MaxEtaLP,
    chi,
    eta_at,
    eta_bar,
    local_check,
    max_eta_lp,
)
from lhvcert.steer import BellFunctional


def random_state(rng, rank=None):
    g = rng.normal(size=(4, rank or 4))
    m = g @ g.T
    return TwoQubitState(m / np.trace(m))


def full_enumeration_eta(lp: MaxEtaLP, state) -> float:
    """Oracle: max eta over mixtures of fully deterministic (Alice and Bob) strategies."""
    c0, c1 = lp.coefficients(state)
    nx, ny, na, nb = c0.shape
    strategies = list(itertools.product(range(na), repeat=nx))
    bob_strats = list(itertools.product(range(nb), repeat=ny))
    lams = list(itertools.product(strategies, bob_strats))
    a_eq = np.zeros((c0.size + 1, 1 + len(lams)))
    a_eq[: c0.size, 0] = -c1.ravel()
    for k, (sa, sb) in enumerate(lams):
        d = np.zeros(c0.shape)
        for x, y in itertools.product(range(nx), range(ny)):
            d[x, y, sa[x], sb[y]] = 1.0
        a_eq[: c0.size, 1 + k] = d.ravel()
    a_eq[-1, 1:] = 1.0
    b_eq = np.append(c0.ravel(), 1.0)
    cost = np.zeros(1 + len(lams))
    cost[0] = -1.0
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] + [(0, None)] * len(lams),
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return float(res.x[0])


class TestChi:
    @pytest.mark.parametrize("alpha", [0.0, 5 / 6])
    def test_identity(self, alpha):
        th, ph, eb = 0.5, 0.3, SHRINK[alpha]
        rho = schmidt_state(th, ph).m
        c = chi(th, ph, eb, zeta(alpha))
        back = eb * c.m + (1 - eb) * np.kron(partial_trace(rho, "A"), zeta(alpha).matrix())
        np.testing.assert_allclose(back, rho, atol=1e-12)
        assert c.trace() == pytest.approx(1.0, abs=1e-12)

    def test_no_noise(self):
        np.testing.assert_allclose(chi(0.4, 1.0, 1.0, zeta(0.3)).m, schmidt_state(0.4, 1.0).m)

    def test_product_state(self):
        eb, z = 0.9, zeta(5 / 6)
        c = chi(0.0, 0.7, eb, z)
        a = np.array([math.cos(0.7), math.sin(0.7)])
        b = (1 / eb) * np.diag([1.0, 0.0]) + (1 - 1 / eb) * z.matrix()
        np.testing.assert_allclose(c.m, np.kron(np.outer(a, a), b), atol=1e-14)

    def test_negative_eigenvalue(self):
        assert chi(math.pi / 4, 0.0, 0.9268, zeta(0.0)).eigvals()[0] < 0

    def test_zero_noise_parameter_rejected(self):
        with pytest.raises(DomainError):
            chi(0.3, 0.0, 0.0, zeta(0.0))


class TestMaxEtaLP:
    def test_product_state_full_visibility(self):
        eta, model = max_eta_lp(schmidt_state(0.0, 0.4))
        assert eta == pytest.approx(1.0, abs=1e-9)
        assert model.invariant_residual() <= 1e-9

    def test_model_reconstructs(self):
        st = chi(0.6, 0.2, SHRINK[0.0], zeta(0.0))
        lp = MaxEtaLP()
        eta, model = lp.solve(st)
        assert model.residual(lp.behavior(st, eta)) <= 1e-8
        assert model.invariant_residual() <= 1e-8
        assert model.weights.sum() == pytest.approx(1.0)

    def test_behavior_matches_generic(self):
        st = schmidt_state(0.6, 0.2)
        lp = MaxEtaLP()
        from lhvcert.blochcore import bob_finite_set
        np.testing.assert_allclose(lp.behavior(st, 0.67).p,
                                   behavior(st, trine_povm(0.67), bob_finite_set()).p[:, :, :, :],
                                   atol=1e-14)

    def test_oracle_equivalence(self, rng):
        for _ in range(20):
            axes = [Vec2.polar(a) for a in rng.uniform(0, 2 * math.pi, 2)]
            bob = [binary_povm(Vec2.polar(a), v) for a, v in zip(rng.uniform(0, 2 * math.pi, 2),
                                                                rng.uniform(0.5, 1, 2))]
            lp = MaxEtaLP(alice_axes=axes, bob=bob)
            st = random_state(rng, rank=int(rng.integers(1, 5)))
            eta, _ = lp.solve(st)
            assert abs(eta - full_enumeration_eta(lp, st)) <= 1e-9


class TestEtaBar:
    def test_spot_value(self):
        res = eta_bar(math.pi / 4, 0.1192)
        assert res.value == pytest.approx(0.6808, abs=2e-3)
        assert res.alpha == 0.0
        assert all(res.value >= v for v in res.per_alpha.values())

    def test_at_theta_star(self):
        assert eta_bar(theta_star(0.67), 0.0).value >= 0.67

    def test_grid_samples_above_target(self):
        for th in (0.3, 0.5, math.pi / 4):
            for ph in np.linspace(0, math.pi / 6, 7):
                assert eta_bar(th, ph).value > 0.67


class TestProperties:
    def test_monotone_in_theta_without_bob_noise(self):
        # with eta_B = 1 the LP value is non-increasing in theta at phi = 0
        vals = [eta_at(th, 0.0, 0.0, eta_b=1.0) for th in np.linspace(0.0, math.pi / 4, 17)]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("alpha", [0.0, 5 / 6])
    def test_symmetries(self, alpha, rng):
        for _ in range(6):
            th, ph = rng.uniform(0.3, math.pi / 4), rng.uniform(0, 2 * math.pi)
            base = eta_at(th, ph, alpha)
            assert eta_at(th, ph + math.pi / 3, alpha) == pytest.approx(base, abs=1e-6)
            assert eta_at(th, -ph, alpha) == pytest.approx(base, abs=1e-6)


class TestLocalCheck:
    def test_noise_only_is_local(self):
        from lhvcert.blochcore import bob_finite_set
        beh = behavior(schmidt_state(math.pi / 4, 0.0), trine_povm(0.0), bob_finite_set()[:4])
        model = local_check(beh)
        assert isinstance(model, LocalModel)
        assert model.residual(beh) <= 1e-8

    def test_chsh_optimal_is_nonlocal(self):
        bob = [binary_povm(Vec2.polar(math.pi / 4)), binary_povm(Vec2.polar(-math.pi / 4))]
        beh = behavior(schmidt_state(math.pi / 4, 0.0), pauli_pair(1.0), bob)
        f = local_check(beh)
        assert isinstance(f, BellFunctional)
        assert f.value(beh) > f.local_bound() + 1e-3
        assert f.known_local_bound == pytest.approx(f.local_bound())

    def test_roundtrip_local_model(self, rng):
        st = random_state(rng)
        lp = MaxEtaLP()
        eta, model = lp.solve(st)
        beh = lp.behavior(st, eta)
        assert isinstance(local_check(beh), LocalModel)
