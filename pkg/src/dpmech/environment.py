"""Finite environments: type spaces, alternatives, reactions and utilities.

An environment bundles per-agent finite type spaces, a finite set of social
alternatives, per-agent finite reaction sets, and a utility function mapping
(agent, type vector, alternative, reaction) into [0, 1].  Derived quantities
(tightest sensitivity, gap, separating sets, optimal reactions) are computed
by exact enumeration subject to an explicit evaluation budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .errors import EnumerationBudgetExceeded, NotNonTrivial

ABS_TOL = 1e-12
DEFAULT_BUDGET = 10**7

INTERDEPENDENT = "interdependent"
PRIVATE_REACTIONS = "private-reactions"
PRIVATE_VALUES = "private-values"

_VALUES_KINDS = (INTERDEPENDENT, PRIVATE_REACTIONS, PRIVATE_VALUES)

_EXACT_TYPES = (int, Fraction)


def _is_exact(x) -> bool:
    return isinstance(x, _EXACT_TYPES)


def _gt(a, b) -> bool:
    """Strictly-greater with tolerance for floats, exact for rationals."""
    if _is_exact(a) and _is_exact(b):
        return a > b
    return a > b + ABS_TOL


def _close(a, b) -> bool:
    if _is_exact(a) and _is_exact(b):
        return a == b
    return abs(a - b) <= ABS_TOL


@dataclass(frozen=True)
class Environment:
    """A finite environment (type spaces, alternatives, reactions, utility).

    ``utility`` is a total function (agent index, full type vector,
    alternative, reaction) -> value in [0, 1].  ``values_kind`` is declared by
    the constructor; use :func:`check_environment` to verify the declaration
    by enumeration.
    """

    type_spaces: tuple
    alternatives: tuple
    reaction_spaces: tuple
    utility: Callable[[int, tuple, Any, Any], Any]
    values_kind: str = INTERDEPENDENT

    def __post_init__(self):
        if self.values_kind not in _VALUES_KINDS:
            raise ValueError(f"unknown values_kind {self.values_kind!r}")
        if not self.type_spaces or not self.alternatives or not self.reaction_spaces:
            raise ValueError("type spaces, alternatives and reactions must be non-empty")
        if len(self.type_spaces) != len(self.reaction_spaces):
            raise ValueError("need one reaction space per agent")
        for space in (*self.type_spaces, *self.reaction_spaces):
            if len(space) == 0:
                raise ValueError("empty per-agent space")
        object.__setattr__(self, "type_spaces", tuple(tuple(t) for t in self.type_spaces))
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(
            self, "reaction_spaces", tuple(tuple(r) for r in self.reaction_spaces)
        )

    @property
    def n(self) -> int:
        return len(self.type_spaces)

    @property
    def agents(self) -> range:
        return range(self.n)

    def type_vectors(self):
        """Iterate over the full product type space in canonical order."""
        return itertools.product(*self.type_spaces)

    def num_type_vectors(self) -> int:
        return math.prod(len(t) for t in self.type_spaces)

    def opponent_vectors(self, i: int):
        """Iterate over T_{-i} as full vectors with a placeholder at i.

        Yields tuples ``t_minus`` of length n-1 in the order of the remaining
        coordinates.
        """
        spaces = [self.type_spaces[j] for j in self.agents if j != i]
        return itertools.product(*spaces)

    def insert_type(self, i: int, t_i, t_minus: tuple) -> tuple:
        return tuple(t_minus[:i]) + (t_i,) + tuple(t_minus[i:])


@dataclass(frozen=True)
class ObjectiveFunction:
    """Social objective F: (type vector, alternative) -> [0, 1].

    ``sensitivity_d`` is a declared upper bound: a unilateral type change
    moves F by at most d/n at any fixed alternative.
    """

    eval: Callable[[tuple, Any], Any]
    sensitivity_d: float

    def __post_init__(self):
        if self.sensitivity_d <= 0:
            raise ValueError("sensitivity bound must be positive")


@dataclass(frozen=True)
class Gap:
    """The environment's gap: worst-case best-alternative misreport loss."""

    gamma: Any
    argmin_witness: tuple | None  # (agent, (t_i, b_i), t_minus)


@dataclass(frozen=True)
class SeparationCertificate:
    """A separating subset of alternatives with a per-triple witness map."""

    separating_set: tuple
    witness: dict = field(compare=False)


@dataclass(frozen=True)
class SensitivityReport:
    tightest_d: float
    declared_d: float
    passed: bool
    witness: tuple | None  # (agent, t, t_hat, s)


def optimal_reaction(env: Environment, i: int, t: tuple, s, allowed=None):
    """Best reaction of agent i at type vector t and alternative s.

    Ties are broken toward the lowest index in the agent's reaction space
    (restricted to ``allowed``, preserving that order), so the selection is
    deterministic.
    """
    if allowed is None:
        allowed = env.reaction_spaces[i]
    best = None
    best_u = None
    for r in allowed:
        u = env.utility(i, t, s, r)
        if best is None or _gt(u, best_u):
            best, best_u = r, u
    if best is None:
        raise ValueError("allowed reaction set must be non-empty")
    return best


def optimal_reaction_set(env: Environment, i: int, t: tuple, s, allowed=None) -> tuple:
    """All reactions within tolerance of the maximum utility."""
    if allowed is None:
        allowed = env.reaction_spaces[i]
    utils = [(r, env.utility(i, t, s, r)) for r in allowed]
    best_u = utils[0][1]
    for _, u in utils[1:]:
        if _gt(u, best_u):
            best_u = u
    return tuple(r for r, u in utils if not _gt(best_u, u) or _close(u, best_u))


def _check_budget(needed: int, budget: int):
    if needed > budget:
        raise EnumerationBudgetExceeded(needed, budget)


def verify_sensitivity(
    F: ObjectiveFunction, env: Environment, budget: int = DEFAULT_BUDGET
) -> SensitivityReport:
    """Tightest sensitivity of F by full enumeration of unilateral swaps.

    Returns n * max |F(t,s) - F(t_hat,s)| over all neighbor pairs and s,
    and whether it is bounded by the declared d (absolute slack 1e-12).
    """
    n = env.n
    pair_count = sum(
        (len(ts) * (len(ts) - 1) // 2)
        * math.prod(len(env.type_spaces[j]) for j in env.agents if j != i)
        for i, ts in enumerate(env.type_spaces)
    )
    _check_budget(pair_count * len(env.alternatives), budget)

    worst = 0.0
    witness = None
    for i in env.agents:
        types_i = env.type_spaces[i]
        for t_minus in env.opponent_vectors(i):
            for a, b in itertools.combinations(types_i, 2):
                ta = env.insert_type(i, a, t_minus)
                tb = env.insert_type(i, b, t_minus)
                for s in env.alternatives:
                    delta = abs(F.eval(ta, s) - F.eval(tb, s))
                    if delta > worst:
                        worst = delta
                        witness = (i, ta, tb, s)
    tightest = n * worst
    return SensitivityReport(
        tightest_d=float(tightest),
        declared_d=float(F.sensitivity_d),
        passed=tightest <= F.sensitivity_d + ABS_TOL,
        witness=witness,
    )


def compute_gap(env: Environment, budget: int = DEFAULT_BUDGET) -> Gap:
    """Exact min-max gap of the environment.

    For every (agent, true type, misreport, opponent profile) the inner max
    runs over alternatives of the utility advantage of the truth-consistent
    optimal reaction over the misreport-consistent one; the gap is the outer
    minimum, with the argmin witness.
    """
    triple_count = sum(
        len(ts) * (len(ts) - 1)
        * math.prod(len(env.type_spaces[j]) for j in env.agents if j != i)
        for i, ts in enumerate(env.type_spaces)
    )
    _check_budget(triple_count * len(env.alternatives), budget)

    gamma = None
    witness = None
    for i in env.agents:
        for t_minus in env.opponent_vectors(i):
            for t_i, b_i in itertools.permutations(env.type_spaces[i], 2):
                t = env.insert_type(i, t_i, t_minus)
                b = env.insert_type(i, b_i, t_minus)
                adv = None
                for s in env.alternatives:
                    r_truth = optimal_reaction(env, i, t, s)
                    r_lie = optimal_reaction(env, i, b, s)
                    d = env.utility(i, t, s, r_truth) - env.utility(i, t, s, r_lie)
                    if adv is None or _gt(d, adv):
                        adv = d
                if gamma is None or _gt(gamma, adv):
                    gamma = adv
                    witness = (i, (t_i, b_i), t_minus)
    if gamma is None:
        # no agent has two types: max of an empty advantage set
        gamma = 0
    return Gap(gamma=gamma, argmin_witness=witness)


def _separates(env: Environment, i: int, t: tuple, t_hat: tuple, s) -> bool:
    set_a = optimal_reaction_set(env, i, t, s)
    set_b = optimal_reaction_set(env, i, t_hat, s)
    return not (set(set_a) & set(set_b))


def find_separating_set(
    env: Environment, budget: int = DEFAULT_BUDGET
) -> SeparationCertificate:
    """Greedy cover of all (agent, type pair, opponent profile) triples.

    Iterates triples in canonical order; when no already-chosen alternative
    separates a triple, the first separating alternative in canonical order
    is added.  Raises :class:`NotNonTrivial` if some triple has none.
    """
    triple_count = sum(
        (len(ts) * (len(ts) - 1) // 2)
        * math.prod(len(env.type_spaces[j]) for j in env.agents if j != i)
        for i, ts in enumerate(env.type_spaces)
    )
    _check_budget(triple_count * len(env.alternatives), budget)

    chosen: list = []
    witness: dict = {}
    for i in env.agents:
        for t_minus in env.opponent_vectors(i):
            for t_i, b_i in itertools.combinations(env.type_spaces[i], 2):
                t = env.insert_type(i, t_i, t_minus)
                t_hat = env.insert_type(i, b_i, t_minus)
                found = None
                for s in chosen:
                    if _separates(env, i, t, t_hat, s):
                        found = s
                        break
                if found is None:
                    for s in env.alternatives:
                        if _separates(env, i, t, t_hat, s):
                            found = s
                            chosen.append(s)
                            break
                if found is None:
                    raise NotNonTrivial((i, (t_i, b_i), t_minus))
                witness[(i, (t_i, b_i), t_minus)] = found
    return SeparationCertificate(separating_set=tuple(chosen), witness=witness)


def check_environment(env: Environment, budget: int = DEFAULT_BUDGET) -> None:
    """Verify the declared invariants by enumeration.

    Checks the [0, 1] utility range everywhere and, when a private kind is
    declared, that optimal reactions (and for private values the utilities)
    do not depend on opponents' types.  Raises ValueError on violation.
    """
    needed = (
        env.num_type_vectors()
        * len(env.alternatives)
        * sum(len(r) for r in env.reaction_spaces)
    )
    _check_budget(needed, budget)

    for t in env.type_vectors():
        for s in env.alternatives:
            for i in env.agents:
                for r in env.reaction_spaces[i]:
                    u = env.utility(i, t, s, r)
                    if u < -ABS_TOL or u > 1 + ABS_TOL:
                        raise ValueError(
                            f"utility {u} outside [0,1] at {(i, t, s, r)}"
                        )

    if env.values_kind in (PRIVATE_REACTIONS, PRIVATE_VALUES):
        for i in env.agents:
            for t_i in env.type_spaces[i]:
                for s in env.alternatives:
                    ref = None
                    for t_minus in env.opponent_vectors(i):
                        t = env.insert_type(i, t_i, t_minus)
                        cur = optimal_reaction_set(env, i, t, s)
                        if ref is None:
                            ref = cur
                        elif set(cur) != set(ref):
                            raise ValueError(
                                f"declared {env.values_kind} but argmax of agent "
                                f"{i} at {(t_i, s)} depends on opponents"
                            )
                        if env.values_kind == PRIVATE_VALUES:
                            for r in env.reaction_spaces[i]:
                                base = env.utility(
                                    i,
                                    env.insert_type(
                                        i, t_i, next(iter(env.opponent_vectors(i)))
                                    ),
                                    s,
                                    r,
                                )
                                if not _close(env.utility(i, t, s, r), base):
                                    raise ValueError(
                                        f"declared private values but utility of "
                                        f"agent {i} at {(t_i, s, r)} depends on "
                                        "opponents"
                                    )
