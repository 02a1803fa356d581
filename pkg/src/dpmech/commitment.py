"""Imposing commitment mechanisms.

The alternative is drawn from a fixed, announcement-independent distribution;
each agent's reaction is then restricted to the single reaction that is
optimal for the announced type vector.  Misreporting therefore carries a
guaranteed expected loss of p_tilde * gamma in non-trivial environments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .environment import (
    DEFAULT_BUDGET,
    PRIVATE_REACTIONS,
    PRIVATE_VALUES,
    Environment,
    SeparationCertificate,
    compute_gap,
    find_separating_set,
    optimal_reaction,
)
from .errors import NotNonTrivial
from .outcomes import SUM_TOL, Outcome, OutcomeDistribution
from .verify import (
    Mechanism,
    VerificationReport,
    check_expost_nash_truthful,
    check_strictly_dominant_truthful,
)


@dataclass(frozen=True)
class CommitmentDistribution:
    """An announcement-independent distribution with a separating support.

    ``p_tilde`` is the minimum probability over the separating set; it is
    computed, not declared.
    """

    alternatives: tuple
    probs: tuple
    separating_set: tuple
    p_tilde: Fraction | float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(self, "probs", tuple(self.probs))
        object.__setattr__(self, "separating_set", tuple(self.separating_set))
        if abs(sum(self.probs) - 1) > SUM_TOL:
            raise ValueError("probabilities must sum to 1")
        if not self.separating_set:
            raise ValueError("separating set must be non-empty")
        index = {s: p for s, p in zip(self.alternatives, self.probs)}
        p_tilde = min(index.get(s, 0) for s in self.separating_set)
        if p_tilde <= 0:
            raise ValueError("separating set must have positive mass everywhere")
        object.__setattr__(self, "p_tilde", p_tilde)


def uniform_commitment(
    env: Environment,
    certificate: SeparationCertificate | None = None,
    budget: int = DEFAULT_BUDGET,
) -> CommitmentDistribution:
    """Uniform P over the full alternative set; p_tilde = 1/|S|.

    The separating set defaults to the greedy certificate's alternatives.
    """
    if certificate is None:
        certificate = find_separating_set(env, budget=budget)
    k = len(env.alternatives)
    return CommitmentDistribution(
        alternatives=env.alternatives,
        probs=tuple(Fraction(1, k) for _ in env.alternatives),
        separating_set=certificate.separating_set or env.alternatives,
    )


def commitment_mechanism(P: CommitmentDistribution, env: Environment) -> Mechanism:
    """M^P: draw s from P; impose the announced-type-optimal reaction.

    The imposed reaction for agent i at alternative s is the deterministic
    optimal reaction for the full announced vector, which collapses to a
    function of the agent's own announcement under private reactions.
    """
    cache: dict = {}

    def mech(b: tuple) -> OutcomeDistribution:
        dist = cache.get(b)
        if dist is None:
            outcomes = [
                Outcome(
                    s,
                    restrictions=tuple(
                        (optimal_reaction(env, i, b, s),) for i in env.agents
                    ),
                )
                for s in P.alternatives
            ]
            dist = OutcomeDistribution(outcomes, P.probs)
            cache[b] = dist
        return dist

    return mech


def commitment_marginal_mechanism(P: CommitmentDistribution) -> Mechanism:
    """The alternative marginal of M^P as an announcement-independent mechanism.

    Drops the imposed restrictions; E[F] is unchanged, so this is the cheap
    stand-in for accuracy measurements at populations where materializing
    per-agent restrictions would dominate the runtime.  Not for incentive
    checks.
    """
    dist = OutcomeDistribution([Outcome(s) for s in P.alternatives], P.probs)

    def mech(b: tuple) -> OutcomeDistribution:
        return dist

    return mech


def truth_advantage(
    env: Environment, P: CommitmentDistribution, i: int, t: tuple, b_i
):
    """Exact expected gain of announcing t_i over b_i under M^P.

    E_P[u_i(t, s, r_i(t, s))] - E_P[u_i(t, s, r_i((b_i, t_-i), s))]; the
    imposed-commitment bound says this is at least p_tilde * gamma when b_i
    differs from t_i.
    """
    b = env.insert_type(i, b_i, t[:i] + t[i + 1:])
    total = 0
    for s, p in zip(P.alternatives, P.probs):
        if p == 0:
            continue
        r_truth = optimal_reaction(env, i, t, s)
        r_lie = optimal_reaction(env, i, b, s)
        total += p * (env.utility(i, t, s, r_truth) - env.utility(i, t, s, r_lie))
    return total


def verify_corollary1(
    env: Environment,
    P: CommitmentDistribution,
    budget: int = DEFAULT_BUDGET,
) -> dict[str, VerificationReport]:
    """Incentive guarantees of the separating commitment mechanism.

    Checks ex-post Nash truthfulness exhaustively and, under private
    reactions, strict dominance of truth.  Rejects trivial environments
    (gap 0) since the guarantees' premise fails there.
    """
    gap = compute_gap(env, budget=budget)
    if not gap.gamma > 0:
        raise NotNonTrivial(gap.argmin_witness)
    mech = commitment_mechanism(P, env)
    reports = {"expost_nash": check_expost_nash_truthful(mech, env, budget=budget)}
    if env.values_kind in (PRIVATE_REACTIONS, PRIVATE_VALUES):
        reports["strictly_dominant"] = check_strictly_dominant_truthful(
            mech, env, budget=budget
        )
    return reports
