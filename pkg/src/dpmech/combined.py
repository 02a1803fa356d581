"""Lottery of an exponential mechanism with an imposing commitment mechanism.

With probability 1-q the exponential mechanism runs on the announced types;
with probability q the commitment mechanism imposes reactions.  Truthfulness
holds once the commitment branch's truth premium q * p_tilde * gamma covers
the exponential branch's manipulation gain of at most 2 * eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .commitment import (
    CommitmentDistribution,
    commitment_marginal_mechanism,
    commitment_mechanism,
)
from .environment import Environment, ObjectiveFunction
from .errors import ParamContractViolated
from .exponential import exponential_mechanism
from .outcomes import OutcomeDistribution, mix
from .verify import Mechanism


@dataclass(frozen=True)
class MechanismParams:
    eps: float
    q: float
    d: float
    p_tilde: float
    gamma: float
    s_count: int
    n: int

    @property
    def beta_bound(self) -> float:
        """Closed-form worst-case shortfall of E[F] from the optimum."""
        pg = self.p_tilde * self.gamma
        return 6 * math.sqrt(self.d / (pg * self.n)) * math.sqrt(
            math.log(self.n * pg * self.s_count / (2 * self.d))
        )


def incentive_contract_holds(
    eps: float, q: float, p_tilde, gamma, tol: float = 0.0
) -> bool:
    """The lottery's truthfulness condition q * p_tilde * gamma >= 2 * eps."""
    return float(q) * float(p_tilde) * float(gamma) >= 2 * eps - tol


def saturating_params(env: Environment, P: CommitmentDistribution, gamma, q=Fraction(1, 2)):
    """Incentive-only parameters: fix q, set eps to saturate the contract.

    Useful for small populations where the asymptotic schedule would demand
    an eps above 1; accuracy is whatever it is.
    """
    eps = float(q) * float(P.p_tilde) * float(gamma) / 2
    return eps, q


def schedule_params(
    env: Environment,
    F: ObjectiveFunction,
    P: CommitmentDistribution,
    gamma,
    n: int | None = None,
) -> MechanismParams:
    """The accuracy-optimal schedule for a given population size.

    eps = sqrt(p_tilde*gamma*d/n * ln(n*p_tilde*gamma*|S|/(2d))) and
    q = 2*eps/(p_tilde*gamma); requires n >= n0 so that q < 1 and eps <= 1.
    """
    if n is None:
        n = env.n
    d = float(F.sensitivity_d)
    pg = float(P.p_tilde) * float(gamma)
    s_count = len(env.alternatives)
    if pg <= 0:
        raise ParamContractViolated("p_tilde * gamma must be positive")
    log_arg = n * pg * s_count / (2 * d)
    if log_arg <= 1:
        raise ParamContractViolated(
            f"population {n} too small: log argument {log_arg} <= 1"
        )
    eps = math.sqrt(pg * d / n * math.log(log_arg))
    q = 2 * eps / pg
    params = MechanismParams(
        eps=eps, q=q, d=d, p_tilde=float(P.p_tilde), gamma=float(gamma),
        s_count=s_count, n=n,
    )
    if not q < 1:
        raise ParamContractViolated(f"q = {q} >= 1 at n = {n}")
    if eps > 1:
        raise ParamContractViolated(f"eps = {eps} > 1 at n = {n}")
    return params


def compute_n0(p_tilde, gamma, d: float, s_count: int, n_max: int = 10**9) -> int:
    """Smallest population size from which the schedule is admissible.

    Ascending scan for the least n with
      n >= max(8d/(p_tilde*gamma) * ln(p_tilde*gamma*|S|/(2d)), 4e^2 d/(p_tilde*gamma*|S|))
    and n / ln(n) > 8d / (p_tilde*gamma).
    """
    pg = float(p_tilde) * float(gamma)
    if pg <= 0:
        raise ParamContractViolated("p_tilde * gamma must be positive")
    c = 8 * d / pg
    floor_a = c * math.log(max(pg * s_count / (2 * d), 1.0))
    floor_b = 4 * math.e**2 * d / (pg * s_count)
    n = max(2, math.ceil(max(floor_a, floor_b)))
    while n <= n_max:
        if n / math.log(n) > c:
            return n
        n += 1
    raise ParamContractViolated(f"no admissible population size below {n_max}")


def combined_mechanism(
    expmech: Mechanism,
    commitment: Mechanism,
    q,
    eps: float,
    p_tilde,
    gamma,
    enforce_contract: bool = True,
) -> Mechanism:
    """The lottery (1-q) * expmech + q * commitment.

    Refuses parameter combinations that break the truthfulness condition
    unless ``enforce_contract`` is off (handy for building counterexamples).
    """
    if not 0 < float(q) < 1:
        raise ParamContractViolated(f"mixing weight q = {q} outside (0, 1)")
    if enforce_contract and not incentive_contract_holds(eps, q, p_tilde, gamma):
        raise ParamContractViolated(
            f"q*p_tilde*gamma = {float(q) * float(p_tilde) * float(gamma)} "
            f"< 2*eps = {2 * eps}"
        )

    def mech(b: tuple) -> OutcomeDistribution:
        return mix([expmech(b), commitment(b)], [1 - q, q])

    return mech


def build_combined(
    env: Environment,
    F: ObjectiveFunction,
    P: CommitmentDistribution,
    gamma,
    eps: float,
    q,
    enforce_contract: bool = True,
    impose: bool = True,
) -> Mechanism:
    """Convenience constructor wiring both branches from the environment.

    ``impose=False`` swaps the commitment branch for its alternative marginal;
    use only for accuracy measurements, never incentive checks.
    """
    branch = (
        commitment_mechanism(P, env)
        if impose
        else commitment_marginal_mechanism(P)
    )
    return combined_mechanism(
        exponential_mechanism(F, env, eps),
        branch,
        q,
        eps,
        P.p_tilde,
        gamma,
        enforce_contract=enforce_contract,
    )
