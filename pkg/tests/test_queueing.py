import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from uavplan import queueing as Q
from uavplan.errors import ConfigurationError, InfeasibleSensingError, NoLinkError
from uavplan.simkit import mg1k_des_oracle


def eq8_mp(rho, K, dps=60):
    """Closed-form occupancy vector in arbitrary precision."""
    with mp.workdps(dps):
        r = mp.mpf(rho)
        s = mp.sqrt(r)
        den = r ** (2 * (K + 1 - s) / (2 - s)) - 1
        pi0 = (r - 1) / den
        piK = r ** ((2 * K - s) / (2 - s)) * (r - 1) / den
        band = [r ** (i - 1) * (r - 1) / (r ** (K - 1) - 1) * (1 - pi0 - piK) for i in range(1, K)]
        return [pi0] + band + [piK]


def draw_valid_query(rng):
    """Parameters where the closed form is a proper distribution."""
    while True:
        K = int(rng.integers(2, 40))
        lam = float(rng.uniform(0.05, 8))
        rs = float(rng.choice([1e6, 5e6, 20e6, 200e6]))
        if rng.random() < 0.8:
            rho = float(rng.uniform(0.02, 3.98))
        else:
            rho = float(rng.uniform((K + 1) ** 2 + 1, (K + 1) ** 2 + 400))
        rate = lam * rs / rho
        qp = Q.QueueParams(lam, rs / rate, K)
        ss = Q.steady_state(qp, "eq8")
        if not ss.proper or Q.closed_form_index(ss, 0.5) is None:
            continue
        c_n = float(rng.uniform(1, 3 * K))
        q0 = float(rng.uniform(0, K * rs))
        p_min = float(rng.uniform(0.05, 0.99))
        return c_n, q0, rate, qp, p_min, rs


class TestSteadyState:
    @pytest.mark.parametrize("rho", [0.2, 0.5, 2, 3, 8])
    @pytest.mark.parametrize("K", [2, 5, 10, 50])
    def test_normalization_grid(self, rho, K):
        assert abs(Q.eq8_probabilities(rho, K).sum() - 1) <= 1e-9

    @given(st.floats(0.01, 500), st.integers(2, 60))
    def test_normalization_random(self, rho, K):
        assert abs(Q.eq8_probabilities(rho, K).sum() - 1) <= 1e-9

    @pytest.mark.parametrize("rho", [0.3, 2.0, 3.5])
    def test_matches_high_precision(self, rho):
        ref = [float(v) for v in eq8_mp(rho, 10)]
        got = Q.eq8_probabilities(rho, 10)
        np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-300)

    def test_rho2_k10_endpoints(self):
        ref = eq8_mp(2, 10)
        pi = Q.eq8_probabilities(2.0, 10)
        assert pi[0] == pytest.approx(float(ref[0]), rel=1e-12)
        assert pi[-1] == pytest.approx(float(ref[-1]), rel=1e-12)

    def test_closed_form_improper_between_4_and_k_plus_1_squared(self):
        pi = Q.eq8_probabilities(50.0, 10)
        assert pi.min() < 0
        assert not Q.steady_state(Q.QueueParams(5, 10, 10), "eq8").proper

    def test_overloaded_queue_concentrates_at_full(self):
        ss = Q.steady_state(Q.QueueParams(5.0, 10.0, 10), "auto")
        assert ss.model == "md1k" and ss.piK > 0.9

    def test_auto_keeps_closed_form_when_proper(self):
        ss = Q.steady_state(Q.QueueParams(1.0, 2.0, 10), "auto")
        assert ss.model == "eq8"
        np.testing.assert_allclose(ss.pi, Q.eq8_probabilities(2.0, 10))

    @pytest.mark.parametrize("s", [1.0, 4.0])
    def test_singular_points_perturbed(self, s):
        pi = Q.eq8_probabilities(s, 8)
        assert np.all(np.isfinite(pi))
        assert abs(pi.sum() - 1) < 1e-9
        np.testing.assert_allclose(pi, Q.eq8_probabilities(s + 1e-6, 8), atol=1e-12)

    def test_near_singular_continuity(self):
        a = Q.eq8_probabilities(1 + 2e-6, 6)
        b = Q.eq8_probabilities(1 - 2e-6, 6)
        np.testing.assert_allclose(a, b, atol=1e-5)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            Q.eq8_probabilities(0, 5)
        with pytest.raises(ConfigurationError):
            Q.eq8_probabilities(2, 1)
        with pytest.raises(ConfigurationError):
            Q.QueueParams(1, 1, 1)
        with pytest.raises(ConfigurationError):
            Q.steady_state(Q.QueueParams(1, 1, 3), "mg1")

    @given(st.floats(0.01, 600), st.integers(2, 40))
    def test_md1k_is_a_distribution(self, rho, K):
        pi = Q.md1k_probabilities(rho, K)
        assert np.all(pi >= 0) and abs(pi.sum() - 1) < 1e-9

    def test_md1k_blocking_identity(self):
        # carried load equals offered load minus what's blocked: 1 - pi0 = rho (1 - piK)
        for rho in (0.3, 1.0, 2.5, 40.0):
            pi = Q.md1k_probabilities(rho, 7)
            assert 1 - pi[0] == pytest.approx(rho * (1 - pi[-1]), rel=1e-9)

    @pytest.mark.parametrize("rho,K", [(0.7, 5), (2.5, 4)])
    def test_md1k_against_simulation(self, rho, K):
        qp = Q.QueueParams(rho / 3.0, 3.0, K)
        est = mg1k_des_oracle(qp, warmup=2_000, horizon=300_000, seed=11)
        exact = Q.md1k_probabilities(rho, K)
        assert est.pi.sum() == pytest.approx(1.0)
        assert np.all(np.abs(est.pi - exact) <= np.maximum(4 * est.half_width, 0.01))


class TestCompletion:
    def _cq(self, required, q, rate, delta, rs=1.0, K=10):
        return Q.CompletionQuery(required, q, rate, delta, rs, K)

    def test_clamps(self):
        ss = Q.steady_state(Q.QueueParams(1, 2, 10))
        assert Q.completion_probability(self._cq(1, 0, 5, 1), ss) == 1.0                 # m <= 0
        assert Q.completion_probability(self._cq(10.5, 0.0, 0.5, 1), ss) == pytest.approx(ss.piK)   # m = K
        assert Q.completion_probability(self._cq(12, 0, 0.1, 1), ss) == 0.0               # m > K

    @given(st.floats(1, 20), st.floats(0, 10), st.floats(0.01, 5), st.integers(1, 200))
    def test_monotone(self, c, q, rate, d):
        ss = Q.steady_state(Q.QueueParams(1, 1 / rate, 10), "auto")
        p = Q.completion_probability(self._cq(c, q, rate, d), ss)
        assert Q.completion_probability(self._cq(c, q, rate, d + 1), ss) >= p
        assert Q.completion_probability(self._cq(c, q + 0.5, rate, d), ss) <= p

    def test_service_time(self):
        assert Q.service_time(7, 7) == 1.0
        assert Q.service_time(200e6, 50e6) == 4.0
        assert Q.service_time(400e6, 50e6) == 2 * Q.service_time(200e6, 50e6)
        with pytest.raises(NoLinkError):
            Q.service_time(1, 0)


class TestMinSensingTime:
    def test_oracle_equivalence_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            c, q0, rate, qp, p, rs = draw_valid_query(rng)
            fast = Q.min_sensing_time(c, q0, rate, qp, p, rs, model="eq8")
            slow = Q.brute_force_min_sensing_time(c, q0, rate, qp, p, rs, model="eq8")
            assert fast == slow

    def test_result_is_tight(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            c, q0, rate, qp, p, rs = draw_valid_query(rng)
            d = Q.min_sensing_time(c, q0, rate, qp, p, rs, model="eq8")
            ss = Q.steady_state(Q._queue_for(rate, rs, qp), "eq8")
            assert Q.completion_probability(Q.CompletionQuery(c, q0, rate, d, rs, qp.capacity), ss) >= p
            if d > 1:
                assert Q.completion_probability(Q.CompletionQuery(c, q0, rate, d - 1, rs, qp.capacity), ss) < p

    @pytest.mark.parametrize("model", ["md1k", "auto"])
    def test_tabulated_threshold_equivalence(self, model):
        rng = np.random.default_rng(9)
        for _ in range(150):
            K = int(rng.integers(2, 25))
            rs = 1e6
            rate = float(rng.uniform(1e4, 5e6))
            qp = Q.QueueParams(float(rng.uniform(0.1, 6)), rs / rate, K)
            c, q0, p = float(rng.uniform(1, 2 * K)), float(rng.uniform(0, K * rs)), float(rng.uniform(0.1, 0.99))
            assert Q.min_sensing_time(c, q0, rate, qp, p, rs, model=model) == \
                Q.brute_force_min_sensing_time(c, q0, rate, qp, p, rs, model=model)

    def test_improper_vector_falls_back_to_scan(self):
        qp = Q.QueueParams(5.0, 40.0, 10)
        args = (2.7, 1.8e9, 5e6, qp, 0.9, 200e6)
        assert Q.min_sensing_time(*args, model="eq8") == Q.brute_force_min_sensing_time(*args, model="eq8")

    def test_lower_clamp(self):
        qp = Q.QueueParams(1.0, 0.5, 10)
        assert Q.min_sensing_time(1.0, 0.0, 2.0, qp, 0.5, 1.0) == 1

    def test_increasing_in_start_buffer(self):
        qp = Q.QueueParams(1.0, 0.5, 10)
        a = Q.min_sensing_time(3.0, 0.0, 2.0, qp, 0.6, 1.0, model="auto")
        b = Q.min_sensing_time(3.0, 20.0, 2.0, qp, 0.6, 1.0, model="auto")
        assert b > a

    def test_tiny_p_min(self):
        qp = Q.QueueParams(1.0, 0.5, 10)
        assert Q.brute_force_min_sensing_time(5.0, 3.0, 2.0, qp, 1e-12, 1.0) == 1

    def test_cap_exceeded(self):
        qp = Q.QueueParams(1.0, 1e6, 10)
        with pytest.raises(InfeasibleSensingError):
            Q.brute_force_min_sensing_time(50.0, 0.0, 1e-6, qp, 0.9, 1.0, delta_max=10)
        with pytest.raises(InfeasibleSensingError):
            Q.min_sensing_time(50.0, 0.0, 1e-6, qp, 0.9, 1.0, delta_max=10, model="auto")

    def test_no_link(self):
        with pytest.raises(NoLinkError):
            Q.min_sensing_time(1, 0, 0, Q.QueueParams(1, 1, 3), 0.9, 1)

    @given(st.floats(0.05, 0.99))
    def test_once_satisfied_stays_satisfied(self, p):
        ss = Q.steady_state(Q.QueueParams(1.0, 0.7, 8), "auto")
        d0 = Q.brute_force_min_sensing_time(6.0, 2.0, 1.0 / 0.7, Q.QueueParams(1.0, 0.7, 8), p, 1.0, model="auto")
        for d in range(d0, d0 + 30):
            assert Q.completion_probability(Q.CompletionQuery(6.0, 2.0, 1 / 0.7, d, 1.0, 8), ss) >= p


class TestTheta:
    def test_examples(self):
        assert Q.theta(5.0, 2.5, 2.5) == 3.0
        assert Q.theta(5.0, 1.0, 2.5) == 4.0
        with pytest.raises(ValueError):
            Q.theta(5.0, -1.0, 2.0)

    def test_consistent_with_min_sensing_time(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 100:
            c, q0, rate, qp, p, rs = draw_valid_query(rng)
            ss = Q.steady_state(Q._queue_for(rate, rs, qp), "eq8")
            rs_star = Q.rho_star(ss, p)
            if not rs_star > 0 or ss.rho == 1:
                continue
            th = Q.theta(c, rs_star, ss.rho)
            m = Q.closed_form_index(ss, p)
            if m != 1 + math.floor(math.log(rs_star) / math.log(ss.rho)):
                continue            # index was clamped, theta no longer describes it
            d = Q.min_sensing_time(c, q0, rate, qp, p, rs, model="eq8")
            approx = (th * rs + q0) / rate
            if approx > 1:
                assert abs(d - approx) <= 1 + 1e-6
            checked += 1

    def test_tradeoff_sign_property(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            th, rs = rng.uniform(0.01, 30), rng.uniform(1e5, 5e8)
            q0, r_loc, r_avg = rng.uniform(0, 3e9), rng.uniform(1e5, 2e7), rng.uniform(1e5, 2e7)
            dd, df = Q.tradeoff_increments(th, rs, q0, r_loc, r_avg, rng.uniform(1e3, 1e8))
            assert (dd < df) == (r_loc > r_avg)

    def test_tradeoff_formula(self):
        dd, df = Q.tradeoff_increments(2.0, 100.0, 50.0, 10.0, 5.0, 10.0)
        assert dd == pytest.approx(10 * (2 * 100 + 50) / (10 * 100))
        assert df == pytest.approx(10 * (2 * 100 + 50) / (5 * 100))
