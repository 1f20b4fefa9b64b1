import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lhvcert.analytic import (
    ETA2,
    chsh_seesaw,
    correlation_matrix,
    horodecki_chsh,
    small_theta_bound,
    theta_star,
    theta_star_literal,
    v_star,
)
from lhvcert.blochcore import DomainError, TwoQubitState, schmidt_state
from lhvcert.simpoly import decompose_trine


def random_state(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    return m / np.trace(m).real


class TestChsh:
    def test_product(self):
        assert horodecki_chsh(schmidt_state(0.0, 0.0)).value == pytest.approx(2.0, abs=1e-12)

    def test_maximally_entangled(self):
        assert horodecki_chsh(schmidt_state(math.pi / 4, 0.0)).value == pytest.approx(
            2 * math.sqrt(2), abs=1e-9)

    def test_phi_independent(self):
        a = horodecki_chsh(schmidt_state(0.3, 1.0)).value
        b = horodecki_chsh(schmidt_state(0.3, 0.0)).value
        assert a == pytest.approx(b, abs=1e-12)
        assert a == pytest.approx(2 * math.sqrt(1 + math.sin(0.6) ** 2), abs=1e-12)

    def test_singular_values_sorted(self):
        rep = horodecki_chsh(schmidt_state(0.4, 0.2))
        assert rep.singular_values[0] >= rep.singular_values[1]

    def test_tsirelson(self, rng):
        for _ in range(200):
            assert horodecki_chsh(random_state(rng)).value <= 2 * math.sqrt(2) + 1e-12

    @pytest.mark.parametrize("theta", [0.1, 0.3, 0.6, math.pi / 4])
    @pytest.mark.parametrize("v", [1.0, 0.9])
    def test_seesaw_matches(self, theta, v):
        st_ = schmidt_state(theta, 0.7)
        expected = 2 * v * math.sqrt(1 + math.sin(2 * theta) ** 2)
        assert chsh_seesaw(st_, visibility=v) == pytest.approx(expected, abs=1e-6)

    def test_correlation_matrix_bell(self):
        t = correlation_matrix(schmidt_state(math.pi / 4, 0.0))
        np.testing.assert_allclose(t, np.diag([1.0, -1.0, 1.0]), atol=1e-15)


class TestThresholds:
    def test_v_star(self):
        assert v_star(0.0) == 1.0
        assert v_star(math.pi / 4) == pytest.approx(1 / math.sqrt(2))
        assert v_star(theta_star(0.67)) == pytest.approx(0.67 / ETA2, abs=1e-12)
        assert v_star(theta_star(0.67)) == pytest.approx(0.91524, abs=1e-5)

    def test_theta_star_value(self):
        th = theta_star(0.67)
        assert th == pytest.approx(0.2279, abs=1e-4)
        assert th == pytest.approx(theta_star_literal(), abs=1e-14)

    def test_theta_star_edge(self):
        assert theta_star(ETA2) == pytest.approx(0.0, abs=1e-7)
        with pytest.raises(DomainError):
            theta_star(0.8)
        with pytest.raises(DomainError):
            theta_star(0.3)

    @given(st.floats(0.52, ETA2))
    def test_roundtrip(self, eta):
        assert v_star(theta_star(eta)) * ETA2 == pytest.approx(eta, abs=1e-12)


class TestSmallThetaBound:
    def test_values(self):
        assert small_theta_bound(0.0) == pytest.approx(ETA2)
        assert small_theta_bound(theta_star(0.67)) == pytest.approx(0.67, abs=1e-12)
        assert small_theta_bound(math.pi / 4) == pytest.approx(ETA2 / math.sqrt(2))

    def test_strictly_decreasing(self):
        vals = [small_theta_bound(t) for t in np.linspace(1e-4, math.pi / 4, 400)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_simulation_precondition(self):
        for th in np.linspace(0, math.pi / 4, 100):
            assert decompose_trine(small_theta_bound(th) / v_star(th) * v_star(th)) is not None

    def test_domain(self):
        with pytest.raises(DomainError):
            small_theta_bound(1.0)


def test_state_type_accepted():
    assert horodecki_chsh(TwoQubitState(np.eye(4) / 4)).value == pytest.approx(0.0, abs=1e-15)
