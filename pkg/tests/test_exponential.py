import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import dpmech as dm
from tests.conftest import random_private_instance

# softmax of scores (0, 1) at rate 1, from mpmath at 50 digits
P_LOW_ORACLE = 0.26894142136999512074934946989610952015792900994316
P_HIGH_ORACLE = 0.73105857863000487925065053010389047984207099005684


def two_point_objective(a, b):
    return dm.ObjectiveFunction(eval=lambda t, s: a if s == 0 else b, sensitivity_d=1)


def test_distribution_matches_high_precision_softmax():
    F = two_point_objective(0.0, 1.0)
    dist = dm.exp_mech_distribution(F, (0, 1), (0,), rate=1.0)
    marg = dist.marginal_alternatives()
    assert marg[0] == pytest.approx(P_LOW_ORACLE, abs=1e-15)
    assert marg[1] == pytest.approx(P_HIGH_ORACLE, abs=1e-15)

    # spot-check a second rate against a live mpmath oracle
    mpmath.mp.dps = 50
    rate = 3.7
    dist = dm.exp_mech_distribution(F, (0, 1), (0,), rate=rate)
    z = mpmath.e**0 + mpmath.e ** (mpmath.mpf(rate))
    assert dist.marginal_alternatives()[1] == pytest.approx(
        float(mpmath.e ** mpmath.mpf(rate) / z), abs=1e-15
    )


def test_rate_zero_is_uniform():
    F = two_point_objective(0.3, 0.9)
    dist = dm.exp_mech_distribution(F, (0, 1), (0,), rate=0.0)
    assert dist.marginal_alternatives() == {0: 0.5, 1: 0.5}


def test_shift_invariance():
    base = two_point_objective(0.1, 0.4)
    shifted = two_point_objective(0.6, 0.9)
    d1 = dm.exp_mech_distribution(base, (0, 1), (0,), rate=5.0)
    d2 = dm.exp_mech_distribution(shifted, (0, 1), (0,), rate=5.0)
    for s in (0, 1):
        assert d1.marginal_alternatives()[s] == pytest.approx(
            d2.marginal_alternatives()[s], abs=1e-15
        )


def test_audit_dp_random_instance():
    env, F = random_private_instance(np.random.default_rng(5))
    eps = 0.5
    rep = dm.audit_dp(dm.exponential_mechanism(F, env, eps), env, eps)
    assert rep.passed
    assert rep.epsilon_measured <= eps + 1e-9


def test_audit_constant_mechanism_is_zero_eps():
    env, F = random_private_instance(np.random.default_rng(6))
    dist = dm.OutcomeDistribution(
        [dm.Outcome(s) for s in env.alternatives],
        [1 / len(env.alternatives)] * len(env.alternatives),
    )
    rep = dm.audit_dp(lambda t: dist, env, 0.0)
    assert rep.epsilon_measured == 0.0


def test_audit_zero_probability_asymmetry():
    env, F = random_private_instance(np.random.default_rng(7))
    s0 = env.alternatives[0]

    def leaky(t):
        if t[0] == 0:
            rest = env.alternatives[1:]
            return dm.OutcomeDistribution(
                [dm.Outcome(s) for s in rest], [1 / len(rest)] * len(rest)
            )
        return dm.OutcomeDistribution(
            [dm.Outcome(s) for s in env.alternatives],
            [1 / len(env.alternatives)] * len(env.alternatives),
        )

    with pytest.raises(dm.ZeroProbabilityAsymmetry):
        dm.audit_dp(leaky, env, 1.0)


@given(st.integers(0, 10**6), st.sampled_from([0.1, 0.5, 1.0]))
@settings(max_examples=30, deadline=None)
def test_dp_property_random(seed, eps):
    env, F = random_private_instance(np.random.default_rng(seed))
    rep = dm.audit_dp(dm.exponential_mechanism(F, env, eps), env, eps)
    assert rep.passed


def test_near_indifference_bound():
    env, F = random_private_instance(np.random.default_rng(8))
    eps = 0.3
    rep = dm.near_indifference_bound_check(
        dm.exponential_mechanism(F, env, eps), env, eps
    )
    assert rep.passed
    worst = (math.exp(eps) - 1) - rep.margin
    assert worst <= 2 * eps + 1e-12


def test_accuracy_bound_and_population_guard():
    env, F = random_private_instance(np.random.default_rng(9))
    eps = 1.0
    if env.n > 2 * math.e / (eps * len(env.alternatives)):
        assert dm.accuracy_bound_check(F, env, eps).passed
    with pytest.raises(dm.PopulationTooSmall):
        dm.accuracy_bound_check(F, env, eps=1e-6)
