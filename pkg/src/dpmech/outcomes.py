"""Exact outcome distributions over (alternative, reaction restriction) pairs.

A mechanism maps an announced type vector to one of these distributions.
Restrictions are per-agent allowed reaction subsets; ``None`` means no agent
is restricted (a non-imposing outcome).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

SUM_TOL = 1e-12


@dataclass(frozen=True)
class Outcome:
    alternative: Any
    restrictions: tuple | None = None  # per-agent tuple of allowed reactions

    @property
    def imposing(self) -> bool:
        return self.restrictions is not None


class OutcomeDistribution:
    """A finite-support probability distribution over outcomes.

    Probabilities may be exact (Fraction) or float; the support order is the
    construction order and is the canonical order used for inverse-CDF
    sampling, so runs are bit-reproducible for a fixed stream.
    """

    __slots__ = ("outcomes", "probs")

    def __init__(self, outcomes: Sequence[Outcome], probs: Sequence):
        outcomes = tuple(outcomes)
        probs = tuple(probs)
        if len(outcomes) != len(probs):
            raise ValueError("support and probability lengths differ")
        if any(p < 0 for p in probs):
            raise ValueError("negative probability")
        total = sum(probs)
        if abs(total - 1) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        for o in outcomes:
            if o.restrictions is not None and any(
                len(allowed) == 0 for allowed in o.restrictions
            ):
                raise ValueError("empty reaction restriction")
        self.outcomes = outcomes
        self.probs = probs

    def __len__(self) -> int:
        return len(self.outcomes)

    def items(self):
        return zip(self.outcomes, self.probs)

    def marginal_alternatives(self) -> dict:
        """Marginal distribution over alternatives (restrictions summed out)."""
        marg: dict = {}
        for o, p in self.items():
            marg[o.alternative] = marg.get(o.alternative, 0) + p
        return marg

    def imposing_mass(self):
        """Total probability of outcomes that restrict some agent."""
        return sum(p for o, p in self.items() if o.imposing)

    def expectation(self, fn):
        """Exact expectation of fn(outcome) under this distribution."""
        return sum(p * fn(o) for o, p in self.items() if p != 0)

    def sample(self, rng) -> Outcome:
        """Inverse-CDF draw over the stored support order.

        ``rng`` is a numpy Generator (or anything with ``random()``); the
        draw is deterministic given the stream state.
        """
        u = rng.random()
        acc = 0.0
        for o, p in self.items():
            acc += float(p)
            if u < acc:
                return o
        return self.outcomes[-1]


def mix(components: Sequence[OutcomeDistribution], weights: Sequence) -> OutcomeDistribution:
    """Convex combination of distributions, keeping components' outcomes apart.

    Outcomes are concatenated in component order; no merging occurs, so an
    alternative reachable both with and without imposition stays represented
    by two distinct support points.
    """
    outcomes: list[Outcome] = []
    probs: list = []
    for dist, w in zip(components, weights):
        for o, p in dist.items():
            outcomes.append(o)
            probs.append(w * p)
    return OutcomeDistribution(outcomes, probs)
