"""Digital-goods monopolist pricing environments.

Agents sit in cohorts; a cohort's signal vector determines every member's
valuation (interdependent values).  The alternative is a posted price, the
reactions are Buy / NotBuy, and the objective is average revenue per agent.
Also builds the two counterexample economies: the pure exponential mechanism
with its dominant low announcement, and the optimal-price lottery whose
all-announce-low profile is a bad Nash equilibrium.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .commitment import CommitmentDistribution
from .environment import (
    INTERDEPENDENT,
    PRIVATE_VALUES,
    Environment,
    ObjectiveFunction,
    optimal_reaction,
)
from .errors import GridTooCoarse
from .outcomes import Outcome, OutcomeDistribution
from .verify import Mechanism

BUY = "buy"
NOT_BUY = "not-buy"

# NOT_BUY first so a value-equals-price tie resolves to not buying
REACTIONS = (NOT_BUY, BUY)


@dataclass(frozen=True)
class PricingInstance:
    """A built pricing economy with its normalization bookkeeping.

    Utilities are (raw + 1) / (1 + vmax) where raw is V - p for a purchase
    and 0 otherwise, so ``scale`` converts raw valuation units into
    normalized utility units.  ``gamma_declared`` is the grid lower bound
    1/m expressed in normalized units; the computed gap may exceed it.
    """

    env: Environment
    F: ObjectiveFunction
    N: int
    D: int
    prices: tuple
    vmax: Any
    scale: Any
    gamma_declared: Any
    mu: Any = None
    m: int | None = None

    @property
    def n(self) -> int:
        return self.N * self.D


def _normalized_utility(V, p, r, vmax):
    raw = (V - p) if r == BUY else 0
    return (raw + 1) / (1 + vmax)


def _buyer_count(vals: Sequence, p) -> int:
    # strict inequality: value exactly at the price does not buy
    return sum(1 for v in vals if v > p)


def build_pricing_env(
    N: int,
    D: int,
    m: int,
    signal_spaces: Sequence[Sequence],
    valuation: Callable[[tuple], tuple],
    check: bool = True,
) -> PricingInstance:
    """Cohort pricing economy on the price grid {0, 1/m, ..., 1}.

    ``signal_spaces`` gives each cohort member's finite signal set (listed in
    increasing order, same for every cohort); ``valuation`` maps a cohort's
    signal vector to the D member valuations.  Verifies monotonicity and the
    grid-fineness premise by enumeration when ``check`` is on.
    """
    if N < 1 or D < 1 or m < 1:
        raise ValueError("need N, D, m >= 1")
    signal_spaces = tuple(tuple(s) for s in signal_spaces)
    if len(signal_spaces) != D:
        raise ValueError("need one signal space per cohort member")

    table = {X: tuple(valuation(X)) for X in itertools.product(*signal_spaces)}
    for X, vals in table.items():
        if len(vals) != D:
            raise ValueError(f"valuation at {X} has {len(vals)} entries, want {D}")
    vmax = max(v for vals in table.values() for v in vals)
    prices = tuple(Fraction(k, m) for k in range(m + 1))

    if check:
        _check_monotone(signal_spaces, table, D)
        _check_fineness(signal_spaces, table, D, m)

    n = N * D

    def utility(i: int, t: tuple, p, r):
        c, j = divmod(i, D)
        V = table[t[c * D:(c + 1) * D]][j]
        return _normalized_utility(V, p, r, vmax)

    if n <= 64:

        def revenue(t: tuple, p):
            buyers = sum(
                _buyer_count(table[t[c * D:(c + 1) * D]], p) for c in range(N)
            )
            return p * Fraction(buyers, n) if isinstance(p, Fraction) else p * buyers / n
    else:
        float_table = {X: np.asarray([float(v) for v in vals])
                       for X, vals in table.items()}
        cache: dict = {}

        def revenue(t: tuple, p):
            vals = cache.get(t)
            if vals is None:
                if len(cache) > 2048:
                    cache.clear()
                vals = np.concatenate(
                    [float_table[t[c * D:(c + 1) * D]] for c in range(N)]
                )
                cache[t] = vals
            return float(p) * int((vals > float(p)).sum()) / n

    env = Environment(
        type_spaces=tuple(signal_spaces[i % D] for i in range(n)),
        alternatives=prices,
        reaction_spaces=tuple(REACTIONS for _ in range(n)),
        utility=utility,
        values_kind=PRIVATE_VALUES if D == 1 else INTERDEPENDENT,
    )
    F = ObjectiveFunction(eval=revenue, sensitivity_d=D)
    scale = Fraction(1, 1) / (1 + vmax) if not isinstance(vmax, float) else 1 / (1 + vmax)
    return PricingInstance(
        env=env, F=F, N=N, D=D, prices=prices, vmax=vmax, scale=scale,
        gamma_declared=Fraction(1, m) * scale, m=m,
    )


def _check_monotone(signal_spaces, table, D):
    for j in range(D):
        others = [signal_spaces[k] for k in range(D) if k != j]
        for rest in itertools.product(*others):
            for lo, hi in zip(signal_spaces[j], signal_spaces[j][1:]):
                X_lo = rest[:j] + (lo,) + rest[j:]
                X_hi = rest[:j] + (hi,) + rest[j:]
                diffs = [table[X_hi][k] - table[X_lo][k] for k in range(D)]
                if any(d < 0 for d in diffs):
                    raise ValueError(
                        f"valuation not monotone in member {j}'s signal at {rest}"
                    )
                if not any(d > 0 for d in diffs):
                    raise ValueError(
                        f"raising member {j}'s signal at {rest} moves no valuation"
                    )


def _check_fineness(signal_spaces, table, D, m):
    """Some grid price p has V_hi > p + 2/m > p > V_lo for each own-signal pair."""
    two_over_m = Fraction(2, m)
    for j in range(D):
        if len(signal_spaces[j]) < 2:
            continue
        others = [signal_spaces[k] for k in range(D) if k != j]
        for rest in itertools.product(*others):
            for lo, hi in itertools.combinations(signal_spaces[j], 2):
                v_lo = table[rest[:j] + (lo,) + rest[j:]][j]
                v_hi = table[rest[:j] + (hi,) + rest[j:]][j]
                ok = any(
                    v_hi > Fraction(k, m) + two_over_m and Fraction(k, m) > v_lo
                    for k in range(m + 1)
                )
                if not ok:
                    raise GridTooCoarse(v_lo, v_hi)


def uniform_price_commitment(inst: PricingInstance) -> CommitmentDistribution:
    """Uniform draw over the whole price grid; p_tilde = 1/|prices|.

    The full grid separates every own-signal pair by the fineness premise,
    so it is taken as the separating set without re-deriving the greedy
    certificate (which is infeasible at sweep-scale populations).
    """
    k = len(inst.prices)
    return CommitmentDistribution(
        alternatives=inst.prices,
        probs=tuple(Fraction(1, k) for _ in inst.prices),
        separating_set=inst.prices,
    )


def _two_level_instance(n: int, v_low, v_high, prices, mu) -> PricingInstance:
    """n independent buyers with valuation v_low or v_high; custom price set."""
    vmax = v_high
    types = (v_low, v_high)

    def utility(i: int, t: tuple, p, r):
        return _normalized_utility(t[i], p, r, vmax)

    def revenue(t: tuple, p):
        return p * Fraction(_buyer_count(t, p), n) / (1 + mu)

    env = Environment(
        type_spaces=tuple(types for _ in range(n)),
        alternatives=tuple(prices),
        reaction_spaces=tuple(REACTIONS for _ in range(n)),
        utility=utility,
        values_kind=PRIVATE_VALUES,
    )
    F = ObjectiveFunction(eval=revenue, sensitivity_d=1)
    scale = Fraction(1, 1) / (1 + vmax)
    return PricingInstance(
        env=env, F=F, N=n, D=1, prices=tuple(prices), vmax=vmax, scale=scale,
        gamma_declared=None, mu=mu,
    )


def example1_env(n: int, mu=Fraction(1, 4)) -> PricingInstance:
    """Buyers valued 1/2+mu or 1+mu, prices {1/2, 1}.

    Under the pure exponential mechanism the constant low announcement
    dominates truth for high types, driving revenue to 1/2 per buyer
    against an optimum of 1.  Objective values are divided by 1+mu so the
    optimum sits at 1/(1+mu).
    """
    mu = Fraction(mu) if not isinstance(mu, float) else mu
    if not 0 < mu < Fraction(1, 2):
        raise ValueError("mu must lie in (0, 0.5)")
    return _two_level_instance(
        n, Fraction(1, 2) + mu, 1 + mu, (Fraction(1, 2), Fraction(1)), mu
    )


def example3_env(n: int, mu=Fraction(1, 4)) -> PricingInstance:
    """Buyers valued 1/n or 1+mu, prices {1/n, 1}."""
    mu = Fraction(mu) if not isinstance(mu, float) else mu
    if not 0 < mu < Fraction(1, 2):
        raise ValueError("mu must lie in (0, 0.5)")
    if n < 2:
        raise ValueError("need n >= 2")
    return _two_level_instance(n, Fraction(1, n), 1 + mu, (Fraction(1, n), Fraction(1)), mu)


def optimal_announced_price(inst: PricingInstance, b: tuple):
    """Revenue-maximizing price for the announced valuations, ties upward.

    Counts announced buyers weakly (V >= p): the monopolist prices assuming
    indifferent agents purchase, which is what makes the announced-low
    profile's optimal price sit at the low price instead of degenerating.
    """
    best_p = None
    best_rev = None
    for p in inst.prices:
        rev = p * sum(1 for v in b if v >= p)
        if best_rev is None or rev >= best_rev:
            best_p, best_rev = p, rev
    return best_p


def example3_mechanism(inst: PricingInstance, imposing_prob=None) -> Mechanism:
    """Posts the announced-optimal price; imposes reactions with low probability.

    With probability 1 - imposing_prob (default 1 - 1/n) the price stands and
    agents react freely; otherwise an announced-optimal reaction is imposed,
    with a value-equals-price tie imposed as Buy (matching the weak buyer
    count in the price choice).  ``imposing_prob=1`` gives the fully imposing
    variant.
    """
    n = inst.n
    q = Fraction(1, n) if imposing_prob is None else Fraction(imposing_prob)
    env = inst.env

    def mech(b: tuple) -> OutcomeDistribution:
        p = optimal_announced_price(inst, b)
        free = Outcome(p)
        imposed = Outcome(
            p,
            restrictions=tuple(
                (optimal_reaction(env, i, b, p, allowed=(BUY, NOT_BUY)),)
                for i in env.agents
            ),
        )
        return OutcomeDistribution([free, imposed], [1 - q, q])

    return mech


def revenue_per_agent(inst: PricingInstance, t: tuple, p):
    """Exact unnormalized average revenue p * |{i: V_i > p}| / n.

    Only for D=1 instances, where announced types are the valuations.
    """
    if inst.D != 1:
        raise ValueError("revenue_per_agent expects a D=1 instance")
    return p * Fraction(_buyer_count(t, p), inst.n)
