from fractions import Fraction

import pytest

import dpmech as dm


def tiny_env():
    """Two agents, two types each, two alternatives, Buy/Pass reactions.

    Utilities are exact and chosen so the gap is 1/4 by hand: alternative
    "a" pays type 0 for reaction keep, alternative "b" pays type 1.
    """
    F14 = Fraction(1, 4)

    def utility(i, t, s, r):
        if r == "pass":
            return Fraction(1, 2)
        # r == "keep": good for the matching type, bad otherwise
        match = (s == "a" and t[i] == 0) or (s == "b" and t[i] == 1)
        return Fraction(3, 4) if match else F14

    return dm.Environment(
        type_spaces=((0, 1), (0, 1)),
        alternatives=("a", "b"),
        reaction_spaces=(("keep", "pass"), ("keep", "pass")),
        utility=utility,
        values_kind=dm.PRIVATE_VALUES,
    )


def test_optimal_reaction_and_tie_break():
    env = tiny_env()
    assert dm.optimal_reaction(env, 0, (0, 0), "a") == "keep"
    assert dm.optimal_reaction(env, 0, (1, 0), "a") == "pass"
    # restricted set forces the bad reaction
    assert dm.optimal_reaction(env, 0, (0, 0), "a", allowed=("pass",)) == "pass"

    def flat(i, t, s, r):
        return Fraction(1, 2)

    env_flat = dm.Environment(
        type_spaces=((0, 1),), alternatives=("a",),
        reaction_spaces=(("x", "y"),), utility=flat,
    )
    # exact tie goes to the first listed reaction
    assert dm.optimal_reaction(env_flat, 0, (0,), "a") == "x"
    assert dm.optimal_reaction_set(env_flat, 0, (0,), "a") == ("x", "y")


def test_compute_gap_exact_value():
    env = tiny_env()
    gap = dm.compute_gap(env)
    # misreport commits to "pass" where "keep" paid 3/4, or vice versa;
    # best separation nets exactly 1/4 on the matching alternative
    assert gap.gamma == Fraction(1, 4)
    assert gap.argmin_witness is not None


def test_separating_set_found():
    env = tiny_env()
    cert = dm.find_separating_set(env)
    assert set(cert.separating_set) <= {"a", "b"}
    for (i, pair, t_minus), s in cert.witness.items():
        t = env.insert_type(i, pair[0], t_minus)
        t_hat = env.insert_type(i, pair[1], t_minus)
        a = set(dm.optimal_reaction_set(env, i, t, s))
        b = set(dm.optimal_reaction_set(env, i, t_hat, s))
        assert not (a & b)


def test_trivial_environment_rejected():
    def flat(i, t, s, r):
        return Fraction(1, 2)

    env = dm.Environment(
        type_spaces=((0, 1),), alternatives=("a", "b"),
        reaction_spaces=(("x",),), utility=flat,
    )
    assert dm.compute_gap(env).gamma == 0
    with pytest.raises(dm.NotNonTrivial):
        dm.find_separating_set(env)


def test_verify_sensitivity_tight_on_average_table(random_instances):
    env, F = random_instances[0]
    rep = dm.verify_sensitivity(F, env)
    assert rep.passed
    assert rep.tightest_d <= 1 + 1e-12


def test_check_environment_range_violation():
    def bad(i, t, s, r):
        return 2

    env = dm.Environment(
        type_spaces=((0,),), alternatives=("a",),
        reaction_spaces=(("x",),), utility=bad,
    )
    with pytest.raises(ValueError, match="outside"):
        dm.check_environment(env)


def test_check_environment_false_private_declaration():
    # agent 0's best reaction flips with agent 1's type: not private
    def utility(i, t, s, r):
        if i == 0:
            want = "x" if t[1] == 0 else "y"
            return 1 if r == want else 0
        return Fraction(1, 2)

    env = dm.Environment(
        type_spaces=((0,), (0, 1)),
        alternatives=("a",),
        reaction_spaces=(("x", "y"), ("x",)),
        utility=utility,
        values_kind=dm.PRIVATE_REACTIONS,
    )
    with pytest.raises(ValueError, match="depends on opponents"):
        dm.check_environment(env)


def test_budget_exceeded():
    env = tiny_env()
    with pytest.raises(dm.EnumerationBudgetExceeded):
        dm.compute_gap(env, budget=1)


def test_environment_validation():
    with pytest.raises(ValueError):
        dm.Environment(
            type_spaces=((0,),), alternatives=("a",),
            reaction_spaces=(("x",), ("y",)),  # wrong arity
            utility=lambda i, t, s, r: 0,
        )
    with pytest.raises(ValueError):
        dm.Environment(
            type_spaces=((0,),), alternatives=("a",),
            reaction_spaces=(("x",),),
            utility=lambda i, t, s, r: 0,
            values_kind="bogus",
        )
