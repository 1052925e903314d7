"""Core data model: aggregation sources, representations, axiom checks.

An *aggregation source* answers "what outcome does this set of features
map to".  A *representation* explains such a map with a strictly positive
weight per feature and an integer rank per feature: the outcome of a set
is the weighted average of its highest-ranked members' singleton
outcomes.  This module holds both notions plus the checks that connect
raw data to the mixture axioms (weighted, strict, extreme averaging).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MissingDataError,
    MissingSingleton,
    UnknownFeature,
)
from .geometry import (
    DEFAULT_TOL,
    SegmentKind,
    SegmentPosition,
    Tolerance,
    Vector,
    affine_dimension,
    as_point,
    segment_coefficient,
)

FeatureSet = frozenset[str]


def validate_feature_id(fid: str) -> str:
    """Feature ids are non-empty strings without whitespace or commas."""
    if not isinstance(fid, str) or not fid:
        raise ValueError(f"feature id must be a non-empty string, got {fid!r}")
    if any(c.isspace() for c in fid) or "," in fid:
        raise ValueError(f"feature id may not contain whitespace or commas: {fid!r}")
    return fid


def feature_set(members: Iterable[str] | str) -> FeatureSet:
    """Normalize an iterable of feature ids (or a single id) to a frozenset."""
    if isinstance(members, str):
        members = [members]
    fs = frozenset(validate_feature_id(m) for m in members)
    if not fs:
        raise ValueError("a feature set must be non-empty")
    return fs


def set_sort_key(members: FeatureSet) -> tuple[int, tuple[str, ...]]:
    """Canonical ordering: by size first, then lexicographically."""
    return (len(members), tuple(sorted(members)))


class SourceMode(Enum):
    DATASET = "dataset"
    ORACLE = "oracle"


class AggregationSource:
    """Common interface of dataset-backed and oracle-backed sources."""

    dimension: int
    mode: SourceMode

    def outcome(self, members: Iterable[str] | str) -> Vector:
        raise NotImplementedError

    def features(self) -> tuple[str, ...]:
        raise NotImplementedError


class DatasetSource(AggregationSource):
    """Finite table of set outcomes.

    Keys are feature sets, values are outcome points of a common
    dimension.  Every member of every set must also appear as a
    singleton, so the data always contains the underlying feature map;
    violating that raises MissingSingleton at construction time.  Stored
    arrays are copies marked read-only.
    """

    def __init__(
        self,
        dimension: int,
        outcomes: Mapping[Iterable[str] | str, Sequence[float] | Vector],
    ):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self.mode = SourceMode.DATASET
        table: dict[FeatureSet, Vector] = {}
        for key, value in outcomes.items():
            fs = feature_set(key)
            arr = as_point(value, dim=self.dimension).copy()
            arr.setflags(write=False)
            if fs in table:
                raise ValueError(f"duplicate set {sorted(fs)} in dataset")
            table[fs] = arr
        missing = sorted(
            {
                (m,)
                for fs in table
                for m in fs
                if frozenset([m]) not in table
            }
        )
        if missing:
            raise MissingSingleton(
                missing, "every member of every set needs a singleton entry"
            )
        self._table = table
        self._features = tuple(sorted({m for fs in table for m in fs}))

    def features(self) -> tuple[str, ...]:
        return self._features

    def sets(self) -> tuple[FeatureSet, ...]:
        """All stored sets in canonical order."""
        return tuple(sorted(self._table, key=set_sort_key))

    def has(self, members: Iterable[str] | str) -> bool:
        return feature_set(members) in self._table

    def outcome(self, members: Iterable[str] | str) -> Vector:
        fs = feature_set(members)
        try:
            return self._table[fs]
        except KeyError:
            raise MissingDataError([fs]) from None

    def __len__(self) -> int:
        return len(self._table)


class OracleSource(AggregationSource):
    """Query-on-demand source wrapping a callable.

    The callable receives a frozenset of feature ids and returns an
    outcome point.  Answers are cached, which both saves queries and
    pins down a single answer per set; the order of first-time queries
    is kept in ``query_log``.
    """

    def __init__(
        self,
        dimension: int,
        fn: Callable[[FeatureSet], Sequence[float] | Vector],
        features: Iterable[str],
    ):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self.mode = SourceMode.ORACLE
        self._fn = fn
        self._features = tuple(sorted(validate_feature_id(f) for f in features))
        if not self._features:
            raise ValueError("an oracle source needs a non-empty feature universe")
        self._cache: dict[FeatureSet, Vector] = {}
        self.query_log: list[FeatureSet] = []

    def features(self) -> tuple[str, ...]:
        return self._features

    def outcome(self, members: Iterable[str] | str) -> Vector:
        fs = feature_set(members)
        unknown = fs - set(self._features)
        if unknown:
            raise UnknownFeature(f"oracle does not know features {sorted(unknown)}")
        if fs not in self._cache:
            arr = as_point(self._fn(fs), dim=self.dimension).copy()
            arr.setflags(write=False)
            self._cache[fs] = arr
            self.query_log.append(fs)
        return self._cache[fs]

    def queried_sets(self) -> tuple[FeatureSet, ...]:
        return tuple(sorted(self._cache, key=set_sort_key))


@dataclass(frozen=True)
class Representation:
    """Weights, ranks, and singleton outcomes for a finite feature set.

    weights : strictly positive weight per feature.  On construction each
        rank class is rescaled so its lexicographically smallest member
        has weight exactly one; the rescaling never changes evaluation.
    ranks : integer rank per feature, larger meaning higher.
    outcomes : singleton outcome point per feature, common dimension.
    """

    weights: Mapping[str, float]
    ranks: Mapping[str, int]
    outcomes: Mapping[str, Vector]

    def __post_init__(self) -> None:
        keys = set(self.weights)
        if not keys:
            raise ValueError("a representation needs at least one feature")
        if keys != set(self.ranks) or keys != set(self.outcomes):
            raise ValueError("weights, ranks and outcomes must share one feature set")
        for fid in keys:
            validate_feature_id(fid)
        points = {f: as_point(p) for f, p in self.outcomes.items()}
        dims = {p.size for p in points.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"outcomes have mixed dimensions {sorted(dims)}")
        ranks = {f: int(self.ranks[f]) for f in keys}
        weights = {}
        for f in keys:
            w = float(self.weights[f])
            if not (w > 0.0 and np.isfinite(w)):
                raise ValueError(f"weight of {f!r} must be strictly positive, got {w!r}")
            weights[f] = w
        # Normalize each rank class at its lexicographically smallest member.
        for level in set(ranks.values()):
            members = sorted(f for f in keys if ranks[f] == level)
            anchor_w = weights[members[0]]
            for f in members:
                weights[f] = weights[f] / anchor_w
        for p in points.values():
            p.setflags(write=False)
        object.__setattr__(self, "weights", MappingProxyType(weights))
        object.__setattr__(self, "ranks", MappingProxyType(ranks))
        object.__setattr__(self, "outcomes", MappingProxyType(points))

    @property
    def dimension(self) -> int:
        return next(iter(self.outcomes.values())).size

    def features(self) -> tuple[str, ...]:
        return tuple(sorted(self.weights))

    def rank_classes(self) -> tuple[tuple[str, ...], ...]:
        """Rank classes from highest to lowest, members sorted."""
        levels = sorted(set(self.ranks.values()), reverse=True)
        return tuple(
            tuple(sorted(f for f in self.weights if self.ranks[f] == level))
            for level in levels
        )

    def restrict(self, members: Iterable[str]) -> Representation:
        fs = feature_set(members)
        unknown = fs - set(self.weights)
        if unknown:
            raise UnknownFeature(f"unknown features {sorted(unknown)}")
        return Representation(
            weights={f: self.weights[f] for f in fs},
            ranks={f: self.ranks[f] for f in fs},
            outcomes={f: self.outcomes[f] for f in fs},
        )


def top_set(rep: Representation, members: Iterable[str] | str) -> FeatureSet:
    """Members of maximal rank within the given set."""
    fs = feature_set(members)
    unknown = fs - set(rep.weights)
    if unknown:
        raise UnknownFeature(f"unknown features {sorted(unknown)}")
    best = max(rep.ranks[f] for f in fs)
    return frozenset(f for f in fs if rep.ranks[f] == best)


def evaluate(rep: Representation, members: Iterable[str] | str) -> Vector:
    """Weight-averaged outcome of the top-ranked members of the set."""
    top = top_set(rep, members)
    total = sum(rep.weights[f] for f in top)
    acc = np.zeros(rep.dimension)
    for f in top:
        acc += rep.weights[f] * rep.outcomes[f]
    return acc / total


def induced_source(
    rep: Representation,
    sets: Iterable[Iterable[str]] | None = None,
) -> DatasetSource:
    """Dataset of forward evaluations of the representation.

    With ``sets`` omitted, every non-empty subset of the features is
    evaluated (callers should keep the feature count modest).
    """
    features = rep.features()
    if sets is None:
        sets = (
            combo
            for size in range(1, len(features) + 1)
            for combo in itertools.combinations(features, size)
        )
    table: dict[FeatureSet, Vector] = {}
    for s in sets:
        fs = feature_set(s)
        table[fs] = evaluate(rep, fs)
    for f in features:
        table.setdefault(frozenset([f]), evaluate(rep, [f]))
    return DatasetSource(rep.dimension, table)


class AxiomMode(Enum):
    """Which variant of the averaging axiom a check enforces."""

    WEIGHTED = "weighted"  # aggregate on the closed segment
    STRICT = "strict"      # aggregate strictly between the endpoints
    EXTREME = "extreme"    # aggregate at an endpoint

    @classmethod
    def from_name(cls, name: str) -> "AxiomMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown axiom mode {name!r}") from None


@dataclass(frozen=True)
class AxiomCheck:
    """One disjoint pair (A, B) checked against f(A | B)."""

    set_a: tuple[str, ...]
    set_b: tuple[str, ...]
    union: tuple[str, ...]
    lam: float | None          # mixing coefficient of set_a; None when degenerate/off line
    residual: float
    degenerate: bool
    passed: bool
    reason: str = ""


@dataclass(frozen=True)
class AxiomReport:
    mode: AxiomMode
    satisfied: bool
    checks: tuple[AxiomCheck, ...]
    tolerance: Tolerance

    @property
    def violations(self) -> tuple[AxiomCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def summary(self) -> str:
        return (
            f"{self.mode.value} axiom: "
            f"{'satisfied' if self.satisfied else 'violated'} "
            f"({len(self.checks)} checks, {len(self.violations)} violations)"
        )


def _judge_pair(
    pos: SegmentPosition,
    mode: AxiomMode,
    tol: Tolerance,
    degenerate_equal: bool | None,
) -> tuple[bool, str]:
    """Pass/fail of one pair under the given mode.

    ``degenerate_equal`` says whether f(A | B) matches the common
    endpoint when the pair is degenerate; None otherwise.
    """
    slack = tol.lam_slack
    if pos.kind is SegmentKind.DEGENERATE:
        if degenerate_equal:
            return True, ""
        return False, "endpoints coincide but the union outcome differs from them"
    if pos.kind is SegmentKind.OFF_LINE:
        return False, "union outcome is off the segment line"
    if pos.kind is SegmentKind.ON_LINE:
        return False, "union outcome is collinear but outside the segment"
    lam = pos.lam
    assert lam is not None
    if mode is AxiomMode.WEIGHTED:
        return True, ""
    interior = slack < lam < 1.0 - slack
    if mode is AxiomMode.STRICT:
        if interior:
            return True, ""
        return False, "mixing coefficient sits at an endpoint"
    # EXTREME
    if not interior:
        return True, ""
    return False, "mixing coefficient is strictly interior"


def check_axiom(
    src: DatasetSource,
    mode: AxiomMode = AxiomMode.WEIGHTED,
    tol: Tolerance = DEFAULT_TOL,
) -> AxiomReport:
    """Check every disjoint pair with recorded union against the axiom.

    Pairs are enumerated from the stored sets: for every stored set U
    with at least two members, every bipartition U = A + B with both
    parts stored is checked once, in canonical order.
    """
    checks: list[AxiomCheck] = []
    for union in src.sets():
        members = sorted(union)
        if len(members) < 2:
            continue
        f_union = src.outcome(union)
        head, rest = members[0], members[1:]
        seen: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
        for size in range(0, len(rest) + 1):
            for extra in itertools.combinations(rest, size):
                part_a = frozenset([head, *extra])
                part_b = union - part_a
                if not part_b:
                    continue
                if not (src.has(part_a) and src.has(part_b)):
                    continue
                seen.append((tuple(sorted(part_a)), tuple(sorted(part_b))))
        for key_a, key_b in sorted(seen):
            f_a = src.outcome(key_a)
            f_b = src.outcome(key_b)
            pos = segment_coefficient(f_union, f_a, f_b, tol)
            degenerate = pos.kind is SegmentKind.DEGENERATE
            equal = tol.close(f_union, f_a) if degenerate else None
            passed, reason = _judge_pair(pos, mode, tol, equal)
            checks.append(
                AxiomCheck(
                    set_a=key_a,
                    set_b=key_b,
                    union=tuple(sorted(union)),
                    lam=None if degenerate else pos.lam,
                    residual=pos.residual,
                    degenerate=degenerate,
                    passed=passed,
                    reason=reason,
                )
            )
    satisfied = all(c.passed for c in checks)
    return AxiomReport(mode=mode, satisfied=satisfied, checks=tuple(checks), tolerance=tol)


def check_richness(src: AggregationSource, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when the recorded outcomes do not all sit on one line.

    Dataset sources use every stored outcome; oracle sources use the
    singleton outcomes of the declared feature universe.
    """
    if isinstance(src, DatasetSource):
        points = [src.outcome(s) for s in src.sets()]
    else:
        points = [src.outcome([f]) for f in src.features()]
    return affine_dimension(points, tol) >= 2


@dataclass(frozen=True)
class StrongRichnessEntry:
    feature: str
    witness: tuple[str, str] | None
    blocked_by: tuple[tuple[str, ...], ...] = ()

    @property
    def witnessed(self) -> bool:
        return self.witness is not None


@dataclass(frozen=True)
class StrongRichnessReport:
    entries: tuple[StrongRichnessEntry, ...]

    @property
    def satisfied(self) -> bool:
        return all(e.witnessed for e in self.entries)

    def witness_for(self, feature: str) -> tuple[str, str] | None:
        for e in self.entries:
            if e.feature == feature:
                return e.witness
        raise UnknownFeature(feature)


def check_strong_richness(
    src: AggregationSource, tol: Tolerance = DEFAULT_TOL
) -> StrongRichnessReport:
    """Per-feature witness search for the strong richness condition.

    A feature x is witnessed by (y, z) when the three singleton outcomes
    are not collinear and both pair aggregates f({x,y}), f({x,z}) differ
    from each endpoint.  Candidates are tried in lexicographic order.
    Raises MissingDataError when a feature has no witness among the
    decidable candidates but some candidate pair set is absent.
    """
    features = src.features()
    singles = {f: src.outcome([f]) for f in features}
    entries: list[StrongRichnessEntry] = []
    all_blocked: set[tuple[str, ...]] = set()

    def pair_interior(x: str, other: str) -> bool | None:
        """True/False when decidable, None when the pair set is missing."""
        fs = frozenset([x, other])
        if isinstance(src, DatasetSource) and not src.has(fs):
            return None
        agg = src.outcome(fs)
        ga = tol.gate(float(np.linalg.norm(agg)), float(np.linalg.norm(singles[x])))
        gb = tol.gate(float(np.linalg.norm(agg)), float(np.linalg.norm(singles[other])))
        return (
            float(np.linalg.norm(agg - singles[x])) > ga
            and float(np.linalg.norm(agg - singles[other])) > gb
        )

    for x in features:
        witness: tuple[str, str] | None = None
        blocked: set[tuple[str, ...]] = set()
        others = [f for f in features if f != x]
        for y, z in itertools.combinations(others, 2):
            if affine_dimension([singles[x], singles[y], singles[z]], tol) < 2:
                continue
            oy = pair_interior(x, y)
            oz = pair_interior(x, z)
            if oy is None:
                blocked.add(tuple(sorted((x, y))))
            if oz is None:
                blocked.add(tuple(sorted((x, z))))
            if oy and oz:
                witness = (y, z)
                break
        if witness is None and blocked:
            all_blocked |= blocked
        entries.append(
            StrongRichnessEntry(
                feature=x,
                witness=witness,
                blocked_by=tuple(sorted(blocked)) if witness is None else (),
            )
        )
    if all_blocked:
        raise MissingDataError(sorted(all_blocked))
    return StrongRichnessReport(entries=tuple(entries))
