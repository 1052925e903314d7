"""Belief aggregation: joint distributions, conditional systems, discounting.

When every outcome is a probability vector over a finite state space and
all features share one rank class, the aggregation rule is plain
Bayesian conditioning of one joint distribution over states times
features: the feature marginal is the normalized weights and each
feature's conditional is its singleton belief.  With several rank
classes the same construction per conditioning set yields a full
conditional probability system whose members satisfy the chain rule.
A stationary time-discount factor can be recovered from a single pair
query at staggered times.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    MultipleRankClasses,
    NotABelief,
    NotStationary,
    UnknownFeature,
)
from .geometry import DEFAULT_TOL, SegmentKind, Tolerance, Vector, as_point, segment_coefficient
from .model import (
    AggregationSource,
    DatasetSource,
    FeatureSet,
    OracleSource,
    Representation,
    evaluate,
    feature_set,
    set_sort_key,
    top_set,
)
from .recovery import (
    MissingData,
    NonRepresentable,
    Recovered,
    RecoveryOutcome,
    recover,
)

logger = logging.getLogger(__name__)


def as_belief(vec: Sequence[float] | Vector, tol: Tolerance = DEFAULT_TOL) -> Vector:
    """Validate a probability vector and renormalize it exactly once.

    Entries may dip below zero by at most the gate (they are clamped);
    the total may differ from one by at most the gate.  Anything worse
    raises NotABelief.  Corrections are logged at debug level.
    """
    arr = as_point(vec)
    g = tol.gate(1.0)
    if float(arr.min()) < -g:
        raise NotABelief(f"negative probability entry {float(arr.min())!r}")
    total = float(arr.sum())
    if abs(total - 1.0) > g:
        raise NotABelief(f"probabilities sum to {total!r}, not 1")
    clipped = np.clip(arr, 0.0, None)
    fixed = clipped / float(clipped.sum())
    drift = float(np.max(np.abs(fixed - arr)))
    if drift > 0.0:
        logger.debug("belief renormalized, max entry correction %.3e", drift)
    fixed.setflags(write=False)
    return fixed


def is_belief_source(src: AggregationSource, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when every singleton outcome is a probability vector."""
    try:
        for f in src.features():
            as_belief(src.outcome([f]), tol)
    except NotABelief:
        return False
    return True


@dataclass(frozen=True)
class JointProbability:
    """Joint distribution over (state, feature) cells.

    ``table`` has one row per state and one column per feature, in the
    order given by ``features``; rows index the state space 0..n-1.
    """

    features: tuple[str, ...]
    table: Vector  # shape (num_states, num_features)

    def __post_init__(self) -> None:
        tab = np.asarray(self.table, dtype=float)
        if tab.ndim != 2 or tab.shape[1] != len(self.features):
            raise ValueError("table must be states x features")
        if float(tab.min()) < 0.0:
            raise ValueError("joint probabilities must be non-negative")
        tab = tab.copy()
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def num_states(self) -> int:
        return int(self.table.shape[0])

    def total(self) -> float:
        return float(self.table.sum())

    def _cols(self, members: Iterable[str] | str) -> list[int]:
        fs = feature_set(members)
        unknown = fs - set(self.features)
        if unknown:
            raise UnknownFeature(f"unknown features {sorted(unknown)}")
        return [i for i, f in enumerate(self.features) if f in fs]

    def prob(self, states: Iterable[int], members: Iterable[str] | str) -> float:
        """Probability of the rectangle (set of states) x (set of features)."""
        rows = sorted(set(int(s) for s in states))
        if rows and (rows[0] < 0 or rows[-1] >= self.num_states):
            raise ValueError(f"state index out of range: {rows}")
        cols = self._cols(members)
        return float(self.table[np.ix_(rows, cols)].sum())

    def feature_marginal(self, members: Iterable[str] | str) -> float:
        return self.prob(range(self.num_states), members)

    def conditional(self, members: Iterable[str] | str) -> Vector:
        """Belief over states given the feature lies in ``members``."""
        cols = self._cols(members)
        mass = float(self.table[:, cols].sum())
        if mass <= 0.0:
            raise ValueError(f"conditioning set {sorted(feature_set(members))} has zero mass")
        return np.asarray(self.table[:, cols].sum(axis=1) / mass)


def build_joint(rep: Representation, tol: Tolerance = DEFAULT_TOL) -> JointProbability:
    """Joint distribution whose conditioning reproduces single-class data.

    Cell (state, feature) gets weight(feature) * belief(feature)(state)
    normalized by the total weight.  Requires belief outcomes and exactly
    one rank class; conditioning on any feature set then returns exactly
    the weighted average of the members' beliefs.
    """
    classes = rep.rank_classes()
    if len(classes) != 1:
        raise MultipleRankClasses(
            f"joint construction needs one rank class, found {len(classes)}"
        )
    features = rep.features()
    beliefs = {f: as_belief(rep.outcomes[f], tol) for f in features}
    total_w = sum(rep.weights[f] for f in features)
    table = np.column_stack([rep.weights[f] * beliefs[f] / total_w for f in features])
    return JointProbability(features=features, table=table)


@dataclass(frozen=True)
class BayesianCheck:
    """Verdict of the one-joint-distribution test on a belief dataset."""

    consistent: bool
    joint: JointProbability | None
    max_residual: float
    detail: str
    recovery: RecoveryOutcome


def check_bayesian(
    src: DatasetSource, tol: Tolerance = DEFAULT_TOL
) -> BayesianCheck:
    """Is the dataset the conditioning of a single joint distribution?

    Recovery must succeed with one rank class; the joint built from the
    recovered representation is then verified against every stored set
    and every state event: P(event x members) / P(states x members)
    must equal the stored belief of the event.
    """
    for f in src.features():
        as_belief(src.outcome([f]), tol)  # NotABelief on bad input

    outcome = recover(src, tol)
    if isinstance(outcome, MissingData):
        return BayesianCheck(
            consistent=False,
            joint=None,
            max_residual=float("nan"),
            detail="recovery lacked required sets",
            recovery=outcome,
        )
    if isinstance(outcome, NonRepresentable):
        return BayesianCheck(
            consistent=False,
            joint=None,
            max_residual=outcome.max_residual,
            detail="no weighted representation exists",
            recovery=outcome,
        )
    rep = outcome.representation
    if len(rep.rank_classes()) != 1:
        return BayesianCheck(
            consistent=False,
            joint=None,
            max_residual=0.0,
            detail="recovered order has more than one rank class",
            recovery=outcome,
        )

    joint = build_joint(rep, tol)
    n = joint.num_states
    worst = 0.0
    for s in src.sets():
        observed = src.outcome(s)
        members = sorted(s)
        marginal = joint.feature_marginal(members)
        for size in range(1, n + 1):
            for event in itertools.combinations(range(n), size):
                lhs = float(sum(observed[list(event)]))
                rhs = joint.prob(event, members) / marginal
                worst = max(worst, abs(lhs - rhs))
    consistent = worst <= tol.gate(1.0)
    detail = "conditioning reproduces every stored set" if consistent else (
        "conditional probabilities disagree with the stored aggregates"
    )
    return BayesianCheck(
        consistent=consistent,
        joint=joint,
        max_residual=worst,
        detail=detail,
        recovery=outcome,
    )


@dataclass(frozen=True)
class ConditionalProbabilitySystem:
    """Family of joint distributions indexed by the conditioning set.

    Each conditioning set A gets a distribution concentrated on the
    cylinder (all states) x A; for a two-tier order the mass sits on the
    top-ranked members of A only.
    """

    features: tuple[str, ...]
    num_states: int
    conditionals: Mapping[FeatureSet, JointProbability]

    def conditional(self, members: Iterable[str] | str) -> JointProbability:
        fs = feature_set(members)
        try:
            return self.conditionals[fs]
        except KeyError:
            raise UnknownFeature(f"no conditional stored for {sorted(fs)}") from None


def build_cps(
    rep: Representation, tol: Tolerance = DEFAULT_TOL
) -> ConditionalProbabilitySystem:
    """Conditional probability system of a belief representation.

    For every non-empty feature subset A, cell (state, x) gets
    weight(x) * belief(x)(state) / (total weight of the top of A) when x
    is top-ranked in A and zero otherwise.
    """
    features = rep.features()
    beliefs = {f: as_belief(rep.outcomes[f], tol) for f in features}
    n = next(iter(beliefs.values())).size
    conditionals: dict[FeatureSet, JointProbability] = {}
    for size in range(1, len(features) + 1):
        for combo in itertools.combinations(features, size):
            fs = frozenset(combo)
            top = top_set(rep, fs)
            total_w = sum(rep.weights[f] for f in top)
            cols = []
            for f in features:
                if f in top:
                    cols.append(rep.weights[f] * beliefs[f] / total_w)
                else:
                    cols.append(np.zeros(n))
            conditionals[fs] = JointProbability(
                features=features, table=np.column_stack(cols)
            )
    return ConditionalProbabilitySystem(
        features=features, num_states=n, conditionals=conditionals
    )


@dataclass(frozen=True)
class ChainViolation:
    part_a: tuple[str, ...]
    part_b: tuple[str, ...]
    state: int
    feature: str
    lhs: float
    rhs: float


@dataclass(frozen=True)
class CpsReport:
    max_residual: float
    violations: tuple[ChainViolation, ...]
    checked_pairs: int

    @property
    def satisfied(self) -> bool:
        return not self.violations


def verify_cps(
    cps: ConditionalProbabilitySystem, tol: Tolerance = DEFAULT_TOL
) -> CpsReport:
    """Check normalization, support, and the chain rule cell by cell.

    For every stored disjoint pair (A, B) whose union is stored, and
    every cell C = (state, feature):
    P(C | A+B) = P(all x A | A+B) P(C | A) + P(all x B | A+B) P(C | B).
    """
    g = tol.gate(1.0)
    violations: list[ChainViolation] = []
    worst = 0.0

    for fs in sorted(cps.conditionals, key=set_sort_key):
        joint = cps.conditionals[fs]
        if abs(joint.total() - 1.0) > g:
            raise ValueError(f"conditional on {sorted(fs)} is not normalized")
        off = joint.feature_marginal(cps.features) - joint.feature_marginal(fs)
        if abs(off) > g:
            raise ValueError(f"conditional on {sorted(fs)} has mass outside its set")

    stored = sorted(cps.conditionals, key=set_sort_key)
    checked = 0
    for a, b in itertools.combinations(stored, 2):
        if a & b:
            continue
        union = a | b
        if union not in cps.conditionals:
            continue
        checked += 1
        j_u = cps.conditionals[union]
        j_a = cps.conditionals[a]
        j_b = cps.conditionals[b]
        coef_a = j_u.feature_marginal(a)
        coef_b = j_u.feature_marginal(b)
        for col, f in enumerate(cps.features):
            for state in range(cps.num_states):
                lhs = float(j_u.table[state, col])
                rhs = coef_a * float(j_a.table[state, col]) + coef_b * float(
                    j_b.table[state, col]
                )
                gap = abs(lhs - rhs)
                worst = max(worst, gap)
                if gap > g:
                    violations.append(
                        ChainViolation(
                            part_a=tuple(sorted(a)),
                            part_b=tuple(sorted(b)),
                            state=state,
                            feature=f,
                            lhs=lhs,
                            rhs=rhs,
                        )
                    )
    return CpsReport(
        max_residual=worst, violations=tuple(violations), checked_pairs=checked
    )


@dataclass(frozen=True)
class TimedQuery:
    """A feature set together with a positive integer time per member."""

    members: FeatureSet
    times: Mapping[str, int]

    def __init__(self, members: Iterable[str] | str, times: Mapping[str, int]):
        fs = feature_set(members)
        t: dict[str, int] = {}
        for k, v in times.items():
            if int(v) < 1:
                raise ValueError(f"time of {k!r} must be a positive integer, got {v!r}")
            t[k] = int(v)
        if set(t) != set(fs):
            raise ValueError("times must cover exactly the members of the set")
        object.__setattr__(self, "members", fs)
        object.__setattr__(self, "times", dict(sorted(t.items())))

    def shifted(self, c: int) -> "TimedQuery":
        return TimedQuery(self.members, {f: t + c for f, t in self.times.items()})

    def key(self) -> tuple[tuple[str, int], ...]:
        return tuple(sorted(self.times.items()))


DiscountOracle = Callable[[TimedQuery], Sequence[float]]


def evaluate_discounted(
    q: float,
    weights: Mapping[str, float],
    beliefs: Mapping[str, Sequence[float] | Vector],
    query: TimedQuery,
) -> Vector:
    """Discounted weighted average q^t(x) w(x) b(x), normalized.

    Invariant under a common shift of all times (up to floating error in
    the powers), since the common factor q^c cancels.
    """
    if not (q > 0.0 and np.isfinite(q)):
        raise ValueError(f"discount factor must be positive and finite, got {q!r}")
    unknown = set(query.members) - set(weights)
    if unknown:
        raise UnknownFeature(f"unknown features {sorted(unknown)}")
    num = None
    den = 0.0
    for f in sorted(query.members):
        coef = (q ** query.times[f]) * float(weights[f])
        vec = as_point(beliefs[f])
        num = coef * vec if num is None else num + coef * vec
        den += coef
    assert num is not None
    return num / den


@dataclass(frozen=True)
class DiscountRecovery:
    q: float
    weights: Mapping[str, float]
    beliefs: Mapping[str, Vector]
    identification_pair: tuple[str, str]
    validation_residuals: tuple[tuple[tuple[tuple[str, int], ...], float], ...]
    max_residual: float
    recovery: Recovered


def recover_discounted(
    oracle: DiscountOracle,
    features: Iterable[str],
    dimension: int,
    tol: Tolerance = DEFAULT_TOL,
    validation: Sequence[TimedQuery] = (),
) -> DiscountRecovery:
    """Recover discount factor and weights from a timed-query oracle.

    Procedure: spot-check stationarity (three fixed queries against
    their shift by one), recover weights from the oracle restricted to
    all-equal times, then read the discount factor off the first
    distinct-outcome pair queried at times (1, 2):
    q = weight ratio times (1 - lambda) / lambda.  Validation queries
    are re-evaluated with the recovered parameters.

    Raises NotStationary when the spot-check fails, and propagates
    recovery errors (including the oracle's own failures) otherwise.
    """
    feats = tuple(sorted(features))
    if len(feats) < 2:
        raise ValueError("discount recovery needs at least two features")

    def ask(query: TimedQuery) -> Vector:
        return as_point(oracle(query), dim=dimension)

    flat = OracleSource(
        dimension,
        lambda fs: ask(TimedQuery(fs, {f: 1 for f in fs})),
        feats,
    )
    singles = {f: flat.outcome([f]) for f in feats}

    pair = next(
        (
            (a, b)
            for a, b in itertools.combinations(feats, 2)
            if not tol.close(singles[a], singles[b])
        ),
        None,
    )
    if pair is None:
        raise ValueError("all singleton outcomes coincide; the factor is unidentified")

    spot_queries = [
        TimedQuery(frozenset(pair), {pair[0]: 1, pair[1]: 2}),
        TimedQuery(frozenset(pair), {pair[0]: 1, pair[1]: 1}),
        TimedQuery(frozenset([pair[0]]), {pair[0]: 1}),
    ]
    for query in spot_queries:
        base = ask(query)
        moved = ask(query.shifted(1))
        if not tol.close(base, moved):
            raise NotStationary(
                f"query {query.key()} changed under a unit time shift"
            )

    outcome = recover(flat, tol)
    if not isinstance(outcome, Recovered):
        raise NotStationary(
            f"equal-time restriction is not strictly rationalizable: {outcome!r}"
        )
    rep = outcome.representation
    if len(rep.rank_classes()) != 1:
        raise MultipleRankClasses(
            "discounted recovery needs every feature in one rank class"
        )

    a, b = pair
    staggered = ask(TimedQuery(frozenset(pair), {a: 1, b: 2}))
    pos = segment_coefficient(staggered, singles[a], singles[b], tol)
    if pos.kind is not SegmentKind.ON_SEGMENT or pos.lam is None:
        raise NotStationary(
            f"staggered pair {pair} is not a mixture of its endpoints"
        )
    lam = pos.lam
    slack = tol.lam_slack
    if lam <= slack or lam >= 1.0 - slack:
        raise NotStationary(f"staggered pair {pair} has an extreme coefficient")
    # lam = q w(a) / (q w(a) + q^2 w(b))  =>  q = (1 - lam)/lam * w(a)/w(b)
    q = (1.0 - lam) / lam * rep.weights[a] / rep.weights[b]

    residuals = []
    worst = 0.0
    for query in validation:
        predicted = evaluate_discounted(q, rep.weights, singles, query)
        observed = ask(query)
        r = float(np.linalg.norm(observed - predicted))
        residuals.append((query.key(), r))
        worst = max(worst, r)
    return DiscountRecovery(
        q=q,
        weights=rep.weights,
        beliefs={f: singles[f] for f in feats},
        identification_pair=pair,
        validation_residuals=tuple(residuals),
        max_residual=worst,
        recovery=outcome,
    )
