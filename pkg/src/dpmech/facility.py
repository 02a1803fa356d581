"""K-facility location on the unit interval.

Grid environments (types, reactions and facilities on {0, 1/m, ..., 1})
with the uniform-commitment and dyad-commitment scheduled mechanisms, plus
the continuous-type construction: a rho-grid exponential mechanism and the
dyadic imposing mechanism with its quadrature-exact misreport loss.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combined import MechanismParams, build_combined, compute_n0, schedule_params
from .commitment import CommitmentDistribution
from .environment import (
    PRIVATE_VALUES,
    Environment,
    ObjectiveFunction,
)
from .errors import PopulationTooSmall, ResolutionBudgetExceeded
from .outcomes import Outcome, OutcomeDistribution
from .verify import Mechanism

# exact arithmetic below this population size, numpy floats above
EXACT_N_LIMIT = 64

DEFAULT_RHO = Fraction(1, 1024)
DEFAULT_SUPPORT_CAP = 2**17


def grid(m: int) -> tuple:
    return tuple(Fraction(j, m) for j in range(m + 1))


@dataclass(frozen=True)
class FacilityInstance:
    env: Environment
    F: ObjectiveFunction
    n: int
    m: int
    K: int
    gamma_declared: Fraction  # 1/m; the computed gap is 0 when K = 1


def build_grid_env(n: int, m: int, K: int) -> FacilityInstance:
    """Grid environment: T_i = R_i = L(m), S = L(m)^K.

    Utility is 1 - |t_i - r_i| when the chosen facility r_i is in s, else 0
    (the raw -|t_i - r_i| / -1 form shifted by +1 into [0, 1]).  F is the
    average utility under nearest-facility reactions, with sensitivity 1.
    """
    if n < 1 or m < 1 or K < 1:
        raise ValueError("need n, m, K >= 1")
    locs = grid(m)
    alternatives = tuple(itertools.product(locs, repeat=K))

    def utility(i: int, t: tuple, s: tuple, r):
        if r in s:
            return 1 - abs(t[i] - r)
        return 0 if isinstance(t[i], Fraction) else 0.0

    if n <= EXACT_N_LIMIT:

        def objective(t: tuple, s: tuple):
            return 1 - Fraction(sum(min(abs(x - f) for f in s) for x in t), n) \
                if all(isinstance(x, Fraction) for x in t) \
                else 1 - sum(min(abs(x - f) for f in s) for x in t) / n
    else:
        cache: dict = {}

        def objective(t: tuple, s: tuple):
            arr = cache.get(t)
            if arr is None:
                if len(cache) > 4096:
                    cache.clear()
                arr = np.asarray([float(x) for x in t])
                cache[t] = arr
            fac = np.asarray([float(f) for f in s])
            return 1.0 - float(np.abs(arr[:, None] - fac[None, :]).min(axis=1).mean())

    env = Environment(
        type_spaces=tuple(locs for _ in range(n)),
        alternatives=alternatives,
        reaction_spaces=tuple(locs for _ in range(n)),
        utility=utility,
        values_kind=PRIVATE_VALUES,
    )
    F = ObjectiveFunction(eval=objective, sensitivity_d=1)
    return FacilityInstance(env=env, F=F, n=n, m=m, K=K, gamma_declared=Fraction(1, m))


def uniform_facility_commitment(inst: FacilityInstance) -> CommitmentDistribution:
    """Uniform over all (m+1)^K placements; p_tilde = 1/(m+1)^K."""
    k = len(inst.env.alternatives)
    return CommitmentDistribution(
        alternatives=inst.env.alternatives,
        probs=tuple(Fraction(1, k) for _ in range(k)),
        separating_set=inst.env.alternatives,
    )


def dyad_facility_commitment(inst: FacilityInstance) -> CommitmentDistribution:
    """Uniform over the m dyads (j/m, (j+1)/m, ..., (j+1)/m); p_tilde = 1/m.

    The dyad at j separates j/m from every higher type (their nearest
    facilities differ), so the m dyads jointly separate all type pairs.
    Needs K >= 2 to host both dyad endpoints.
    """
    if inst.K < 2:
        raise ValueError("dyad commitment needs K >= 2")
    m = inst.m
    dyads = tuple(
        (Fraction(j, m),) + (Fraction(j + 1, m),) * (inst.K - 1) for j in range(m)
    )
    return CommitmentDistribution(
        alternatives=dyads,
        probs=tuple(Fraction(1, m) for _ in range(m)),
        separating_set=dyads,
    )


@dataclass(frozen=True)
class ScheduledMechanism:
    mech: Mechanism
    params: MechanismParams
    P: CommitmentDistribution
    inst: FacilityInstance
    n0: int


def _scheduled(inst: FacilityInstance, P: CommitmentDistribution, impose: bool) -> ScheduledMechanism:
    gamma = inst.gamma_declared
    n0 = compute_n0(P.p_tilde, gamma, 1.0, len(inst.env.alternatives))
    if inst.n <= n0:
        raise PopulationTooSmall(inst.n, n0)
    params = schedule_params(inst.env, inst.F, P, gamma, n=inst.n)
    mech = build_combined(
        inst.env, inst.F, P, gamma, params.eps, params.q, impose=impose
    )
    return ScheduledMechanism(mech=mech, params=params, P=P, inst=inst, n0=n0)


def loc1(n: int, m: int, K: int, impose: bool = True) -> ScheduledMechanism:
    """Combined mechanism with the uniform commitment, scheduled for accuracy."""
    inst = build_grid_env(n, m, K)
    return _scheduled(inst, uniform_facility_commitment(inst), impose)


def loc2(n: int, m: int, K: int, impose: bool = True) -> ScheduledMechanism:
    """Combined mechanism with the m-dyad commitment; p_tilde = 1/m, K >= 2."""
    inst = build_grid_env(n, m, K)
    return _scheduled(inst, dyad_facility_commitment(inst), impose)


# ---------------------------------------------------------------- continuous


def continuous_objective(t: Sequence, s: Sequence):
    """1 - average distance to the nearest facility, on real coordinates."""
    n = len(t)
    total = sum(min(abs(x - f) for f in s) for x in t)
    return 1 - (Fraction(total, 1) / n if isinstance(total, (int, Fraction)) else total / n)


def _rho_grid(rho) -> tuple:
    rho = Fraction(rho)
    if rho <= 0 or rho > 1:
        raise ValueError("rho must lie in (0, 1]")
    steps = 1 / rho
    if steps.denominator != 1 or steps.numerator & (steps.numerator - 1):
        raise ValueError("rho must be a reciprocal power of two")
    return tuple(Fraction(j) * rho for j in range(int(steps) + 1))


def continuous_expmech_distribution(
    t: Sequence,
    eps: float,
    K: int,
    rho=DEFAULT_RHO,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> OutcomeDistribution:
    """Exact exponential-mechanism distribution over the rho-grid of [0,1]^K.

    Rate n*eps/2 (sensitivity 1); the grid max of F is within rho of the
    continuous max, so every continuous-case accuracy claim picks up at most
    a rho slack.
    """
    pts = _rho_grid(rho)
    support = len(pts) ** K
    if support > cap:
        raise ResolutionBudgetExceeded(support, cap)
    t_arr = np.asarray([float(x) for x in t])
    pts_arr = np.asarray([float(p) for p in pts])
    # distance of each agent to each grid point, then min over the K slots
    d1 = np.abs(t_arr[:, None] - pts_arr[None, :])
    alternatives = []
    scores = np.empty(support)
    for idx, combo in enumerate(itertools.product(range(len(pts)), repeat=K)):
        alternatives.append(tuple(pts[j] for j in combo))
        scores[idx] = 1.0 - d1[:, list(combo)].min(axis=1).mean()
    rate = len(t) * eps / 2
    shifted = rate * scores
    shifted -= shifted.max()
    weights = np.exp(shifted)
    probs = weights / weights.sum()
    return OutcomeDistribution([Outcome(s) for s in alternatives], [float(p) for p in probs])


def continuous_expmech_sample(t, eps, K, rho, rng, cap=DEFAULT_SUPPORT_CAP):
    return continuous_expmech_distribution(t, eps, K, rho, cap).sample(rng).alternative


@dataclass(frozen=True)
class DyadicCommitment:
    """X uniform in {1..m_bar}, Y uniform in [0, 2^X - 1]; facilities at
    Y/2^X and (at the remaining K-1 slots) (Y+1)/2^X."""

    m_bar: int
    K: int = 1

    def __post_init__(self):
        if self.m_bar < 1 or self.K < 1:
            raise ValueError("need m_bar >= 1 and K >= 1")

    def sample(self, rng):
        x = int(rng.integers(1, self.m_bar + 1))
        y = float(rng.random()) * (2**x - 1)
        a = y / 2**x
        b = (y + 1) / 2**x
        # both dyad endpoints are always present; K=1 is read as the pair
        return x, y, (a,) + (b,) * max(self.K - 1, 1)

    def committed_facility(self, v, x, y):
        """The imposed choice for announced coordinate v: the nearer of
        Y/2^X and (Y+1)/2^X, ties toward the smaller."""
        a = Fraction(y) / 2**x
        return a if Fraction(v) <= a + Fraction(1, 2**(x + 1)) else a + Fraction(1, 2**x)

    def misreport_loss(self, t, b):
        """Exact E[|t - committed(b)| - |t - committed(t)|] by quadrature.

        For each X the integrand is piecewise linear in Y with kinks at the
        commitment switch points and the points where a facility crosses t,
        so midpoint sums over the cut segments are exact.
        """
        t = Fraction(t)
        b = Fraction(b)
        total = Fraction(0)
        for x in range(1, self.m_bar + 1):
            two_x = Fraction(2**x)
            hi = two_x - 1

            def committed(v, y):
                a = y / two_x
                # switch rule: the lower facility wins iff y >= 2^x v - 1/2
                return a if y >= two_x * v - Fraction(1, 2) else a + 1 / two_x

            cuts = {Fraction(0), hi}
            for c in (two_x * t - Fraction(1, 2), two_x * b - Fraction(1, 2),
                      two_x * t, two_x * t - 1):
                if 0 < c < hi:
                    cuts.add(c)
            pts = sorted(cuts)
            integral = Fraction(0)
            for lo_y, hi_y in zip(pts, pts[1:]):
                mid = (lo_y + hi_y) / 2
                g = abs(t - committed(b, mid)) - abs(t - committed(t, mid))
                integral += g * (hi_y - lo_y)
            total += integral / hi
        return total / self.m_bar


def dyadic_commitment(m_bar: int, K: int = 1) -> DyadicCommitment:
    return DyadicCommitment(m_bar=m_bar, K=K)


@dataclass(frozen=True)
class Loc3Params:
    n: int
    K: int
    eps: float
    m_bar: int
    q: float
    rho: Fraction
    accuracy_target: float


def loc3_params(n: int, K: int, rho=DEFAULT_RHO) -> Loc3Params:
    """eps = sqrt(K+1)/n^(2/3), m_bar = ceil(log2(n^(1/3)/(6 sqrt(K+1) ln n)))
    clamped to at least 1, q = 16 eps m_bar 2^m_bar.

    The log is read base 2; the clamp covers populations where the raw
    formula dips below 1 (the domination algebra is unaffected).
    """
    if n < 3:
        raise ValueError("need n >= 3")
    eps = math.sqrt(K + 1) / n ** (2 / 3)
    raw = n ** (1 / 3) / (6 * math.sqrt(K + 1) * math.log(n))
    m_bar = max(1, math.ceil(math.log2(raw))) if raw > 0 else 1
    q = 16 * eps * m_bar * 2**m_bar
    target = 32 * math.sqrt(K + 1) / n ** (1 / 3) * math.log(n)
    return Loc3Params(
        n=n, K=K, eps=eps, m_bar=m_bar, q=q, rho=Fraction(rho),
        accuracy_target=target,
    )


def _loc3_admissible(p: Loc3Params) -> bool:
    return p.q < 1 and p.eps <= 0.5 and p.m_bar <= math.log(p.n)


def loc3_n0(K: int, n_max: int = 10**7) -> int:
    """Smallest population for which the loc3 schedule is admissible."""
    n = 3
    while n <= n_max:
        if _loc3_admissible(loc3_params(n, K)):
            return n
        n += 1
    raise PopulationTooSmall(n_max, math.inf)


def domination_margin(p: Loc3Params) -> float:
    """q*Delta^2/(8 m_bar) - 2*eps*Delta at the band edge Delta = 2^(1-m_bar).

    Nonnegative whenever q >= 16 eps m_bar 2^m_bar, so the commitment
    branch's loss outweighs the exponential branch's temptation for every
    misreport beyond the band.
    """
    delta = 2.0 ** (1 - p.m_bar)
    return p.q * delta**2 / (8 * p.m_bar) - 2 * p.eps * delta


@dataclass(frozen=True)
class Loc3Mechanism:
    params: Loc3Params
    dyadic: DyadicCommitment

    def sample(self, t: Sequence, rng):
        """One alternative draw: dyadic branch w.p. q, else rho-grid expmech."""
        if rng.random() < self.params.q:
            return self.dyadic.sample(rng)[2]
        return continuous_expmech_sample(
            t, self.params.eps, self.params.K, self.params.rho, rng
        )


def loc3(n: int, K: int, rho=DEFAULT_RHO) -> Loc3Mechanism:
    params = loc3_params(n, K, rho)
    if not _loc3_admissible(params):
        raise PopulationTooSmall(n, loc3_n0(K))
    return Loc3Mechanism(params=params, dyadic=DyadicCommitment(m_bar=params.m_bar, K=K))


def lipschitz_checks(t: Sequence, b: Sequence, alternatives: Sequence) -> dict:
    """Both continuity facts behind the accuracy analysis, on given probes.

    Pointwise: |F(t,s) - F(b,s)| <= mean |t_i - b_i| for every probed s.
    Max form: the best-alternative values differ by at most max |t_i - b_i|.
    """
    n = len(t)
    mean_shift = sum(abs(x - y) for x, y in zip(t, b)) / n
    max_shift = max(abs(x - y) for x, y in zip(t, b)) if n else 0
    worst = 0
    for s in alternatives:
        diff = abs(continuous_objective(t, s) - continuous_objective(b, s))
        excess = diff - mean_shift
        if excess > worst:
            worst = excess
    max_t = max(continuous_objective(t, s) for s in alternatives)
    max_b = max(continuous_objective(b, s) for s in alternatives)
    return {
        "pointwise_excess": float(worst),
        "pointwise_ok": worst <= 1e-12,
        "max_diff": float(abs(max_t - max_b)),
        "max_bound": float(max_shift),
        "max_ok": abs(max_t - max_b) <= max_shift + 1e-12,
    }
