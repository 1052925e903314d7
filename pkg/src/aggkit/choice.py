"""Stochastic choice viewed through average choices per menu.

When features are alternatives embedded in a vector space and the
recorded outcome of a menu is its average choice, a strictly averaging
dataset is exactly one generated by a Luce rule (choice probabilities
proportional to fixed positive weights), and a weakly averaging dataset
is one generated by a two-stage rule: first restrict to the top-ranked
alternatives, then play Luce among them.  Path independence of a choice
oracle and interiority of observed choices give quick structural
diagnostics on top of that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import NotInConvexHull, OracleRefused, UnknownFeature
from .geometry import (
    DEFAULT_TOL,
    Tolerance,
    Vector,
    as_point,
    convex_coefficients,
    relative_interior_check,
)
from .model import (
    AggregationSource,
    DatasetSource,
    Representation,
    check_richness,
    evaluate,
    feature_set,
    top_set,
)
from .recovery import (
    MissingData,
    NonRepresentable,
    Recovered,
    RecoveryOutcome,
    recover,
)

__all__ = [
    "Menu",
    "check_menu_feasibility",
    "MenuFeasibilityReport",
    "LuceOutcome",
    "recover_luce",
    "recover_two_stage",
    "choice_probabilities",
    "PathIndependenceReport",
    "check_path_independence",
    "BoundaryReport",
    "boundary_diagnostic",
]


@dataclass(frozen=True)
class Menu:
    """A finite set of alternatives given by coordinates.

    Items are keyed by id; constructed menus (for path independence
    checks) use synthetic ids for previously observed average choices.
    """

    coords: Mapping[str, Vector]

    def __init__(self, coords: Mapping[str, Sequence[float] | Vector]):
        if not coords:
            raise ValueError("a menu needs at least one alternative")
        fixed = {}
        dim = None
        for key in sorted(coords):
            p = as_point(coords[key], dim=dim)
            dim = p.size
            p = p.copy()
            p.setflags(write=False)
            fixed[key] = p
        object.__setattr__(self, "coords", fixed)

    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.coords))

    def points(self) -> list[Vector]:
        return [self.coords[k] for k in self.ids()]

    @property
    def dimension(self) -> int:
        return next(iter(self.coords.values())).size


ChoiceOracle = Callable[[Menu], Sequence[float]]


@dataclass(frozen=True)
class MenuFeasibilityRow:
    members: tuple[str, ...]
    feasible: bool
    note: str = ""


@dataclass(frozen=True)
class MenuFeasibilityReport:
    rows: tuple[MenuFeasibilityRow, ...]

    @property
    def all_feasible(self) -> bool:
        return all(r.feasible for r in self.rows)


def check_menu_feasibility(
    src: DatasetSource, tol: Tolerance = DEFAULT_TOL
) -> MenuFeasibilityReport:
    """Is every recorded average choice inside its menu's convex hull?

    Any stochastic choice rule keeps the average inside the hull of the
    alternatives, so a failure here rules out every such rule at once.
    """
    rows = []
    for s in src.sets():
        members = sorted(s)
        outcome = src.outcome(s)
        points = [src.outcome([m]) for m in members]
        coef = convex_coefficients(outcome, points, tol)
        rows.append(
            MenuFeasibilityRow(
                members=tuple(members),
                feasible=coef is not None,
                note="" if coef is not None else "average choice outside the hull",
            )
        )
    return MenuFeasibilityReport(rows=tuple(rows))


@dataclass(frozen=True)
class LuceOutcome:
    """Result of a Luce (or two-stage) rationalizability test.

    ``weights``/``ranks`` are set on success; otherwise ``reason`` says
    what failed and ``recovery`` holds the underlying recovery outcome.
    """

    rationalizable: bool
    weights: Mapping[str, float] | None
    ranks: Mapping[str, int] | None
    reason: str
    recovery: RecoveryOutcome | None
    rich: bool


def _luce_like(
    src: DatasetSource, tol: Tolerance, allow_ranks: bool
) -> LuceOutcome:
    rich = check_richness(src, tol)
    outcome = recover(src, tol)
    if isinstance(outcome, MissingData):
        return LuceOutcome(
            rationalizable=False,
            weights=None,
            ranks=None,
            reason="required menus are missing from the data",
            recovery=outcome,
            rich=rich,
        )
    if isinstance(outcome, NonRepresentable):
        return LuceOutcome(
            rationalizable=False,
            weights=None,
            ranks=None,
            reason="no positive weight function reproduces the averages",
            recovery=outcome,
            rich=rich,
        )
    rep = outcome.representation
    classes = rep.rank_classes()
    if not allow_ranks and len(classes) > 1:
        low, high = sorted(classes[-1])[0], sorted(classes[0])[0]
        return LuceOutcome(
            rationalizable=False,
            weights=None,
            ranks=None,
            reason=(
                f"pair {{{low},{high}}} averages at an endpoint, so {low!r} is "
                "never chosen against "
                f"{high!r}; a single-stage Luce rule cannot do that"
            ),
            recovery=outcome,
            rich=rich,
        )
    return LuceOutcome(
        rationalizable=True,
        weights=rep.weights,
        ranks=rep.ranks,
        reason="",
        recovery=outcome,
        rich=rich,
    )


def recover_luce(src: DatasetSource, tol: Tolerance = DEFAULT_TOL) -> LuceOutcome:
    """Weights of a Luce rule matching the dataset, if one exists.

    The dataset must satisfy strict averaging: every pair average lies
    strictly between the alternatives.  Uniqueness of the weights needs
    a rich dataset (``rich`` echoes that check).
    """
    return _luce_like(src, tol, allow_ranks=False)


def recover_two_stage(src: DatasetSource, tol: Tolerance = DEFAULT_TOL) -> LuceOutcome:
    """Ranks and weights of a two-stage Luce rule matching the dataset."""
    return _luce_like(src, tol, allow_ranks=True)


def choice_probabilities(
    weights: Mapping[str, float],
    ranks: Mapping[str, int],
    members: Iterable[str] | str,
) -> dict[str, float]:
    """Choice distribution of the two-stage rule on one menu.

    Top-ranked members split the mass in proportion to their weights;
    everything else gets probability zero.
    """
    fs = feature_set(members)
    unknown = fs - set(weights)
    if unknown:
        raise UnknownFeature(f"unknown alternatives {sorted(unknown)}")
    best = max(ranks[f] for f in fs)
    top = [f for f in sorted(fs) if ranks[f] == best]
    total = sum(float(weights[f]) for f in top)
    return {
        f: (float(weights[f]) / total if f in top else 0.0) for f in sorted(fs)
    }


def make_dictatorial_oracle() -> ChoiceOracle:
    """Deterministic rule: always pick the lexicographically largest point.

    Comparing coordinate tuples gives a fixed strict order on the whole
    space, so the choice from any menu is the order's maximum.  Such a
    rule is path independent (the best of a union is the best of the
    parts' bests) but its averages sit on menu vertices, never inside.
    """

    def oracle(menu: Menu) -> Vector:
        return max(menu.points(), key=lambda p: tuple(p))

    return oracle


def make_luce_oracle(
    known: Mapping[str, Sequence[float] | Vector],
    weights: Mapping[str, float],
    default_weight: float = 1.0,
    tol: Tolerance = DEFAULT_TOL,
) -> ChoiceOracle:
    """Luce rule priced by coordinates, with a weight extension.

    Points matching a known alternative (by coordinates, within the
    gate) use its weight; anything else, such as the constructed average
    points a path independence check feeds back, gets ``default_weight``.
    That extension is what breaks path independence for a genuine Luce
    rule: the average of a menu does not remember the menu's total
    weight.
    """
    anchors = [(as_point(known[k]), float(weights.get(k, default_weight))) for k in sorted(known)]

    def weight_of(p: Vector) -> float:
        for q, w in anchors:
            if tol.close(p, q):
                return w
        return float(default_weight)

    def oracle(menu: Menu) -> Vector:
        pts = menu.points()
        ws = [weight_of(p) for p in pts]
        total = sum(ws)
        acc = np.zeros(menu.dimension)
        for p, w in zip(pts, ws):
            acc += w * p
        return acc / total

    return oracle


@dataclass(frozen=True)
class PathIndependenceRow:
    part_a: tuple[str, ...]
    part_b: tuple[str, ...]
    residual: float
    passed: bool


@dataclass(frozen=True)
class PathIndependenceReport:
    rows: tuple[PathIndependenceRow, ...]
    max_residual: float

    @property
    def satisfied(self) -> bool:
        return all(r.passed for r in self.rows)


def check_path_independence(
    oracle: ChoiceOracle,
    menu_pairs: Sequence[tuple[Menu, Menu]],
    tol: Tolerance = DEFAULT_TOL,
) -> PathIndependenceReport:
    """Does choosing from parts and then from the results match the whole?

    For each disjoint pair (A, B) the oracle prices A, B, their union,
    and a constructed two-point menu of the two partial choices; the rule
    is path independent on the pair when the constructed menu's choice
    matches the union's.  This needs an oracle, not a dataset: the
    constructed menus are generally not recorded anywhere.

    Oracle failures are wrapped in OracleRefused.
    """

    def ask(menu: Menu) -> Vector:
        try:
            out = oracle(menu)
        except Exception as exc:  # noqa: BLE001 - anything the oracle throws
            raise OracleRefused(f"oracle failed on menu {menu.ids()}: {exc}") from exc
        if out is None:
            raise OracleRefused(f"oracle returned nothing for menu {menu.ids()}")
        return as_point(out, dim=menu.dimension)

    rows = []
    worst = 0.0
    for menu_a, menu_b in menu_pairs:
        shared = set(menu_a.ids()) & set(menu_b.ids())
        if shared:
            raise ValueError(f"menu pair shares alternatives {sorted(shared)}")
        union = Menu({**menu_a.coords, **menu_b.coords})
        whole = ask(union)
        pick_a = ask(menu_a)
        pick_b = ask(menu_b)
        if tol.close(pick_a, pick_b):
            reduced = ask(Menu({"q0": pick_a}))
        else:
            reduced = ask(Menu({"q0": pick_a, "q1": pick_b}))
        residual = float(np.linalg.norm(whole - reduced))
        passed = residual <= tol.gate(
            float(np.linalg.norm(whole)), float(np.linalg.norm(reduced)), 1.0
        )
        worst = max(worst, residual)
        rows.append(
            PathIndependenceRow(
                part_a=menu_a.ids(),
                part_b=menu_b.ids(),
                residual=residual,
                passed=passed,
            )
        )
    return PathIndependenceReport(rows=tuple(rows), max_residual=worst)


@dataclass(frozen=True)
class BoundaryRow:
    members: tuple[str, ...]
    interior: bool
    in_hull: bool


@dataclass(frozen=True)
class BoundaryReport:
    """Menus whose average choice touches the relative boundary.

    A rule with full-support choice probabilities keeps every average in
    the relative interior of its menu, so with a single recovered rank
    class any boundary menu contradicts the recovery and is listed in
    ``contradictions``.  Deterministic (dictatorial) rules sit at a
    vertex on every menu and are flagged everywhere.
    """

    rows: tuple[BoundaryRow, ...]
    boundary_menus: tuple[tuple[str, ...], ...]
    contradictions: tuple[tuple[str, ...], ...]
    single_class: bool | None


def boundary_diagnostic(
    src: DatasetSource, tol: Tolerance = DEFAULT_TOL
) -> BoundaryReport:
    """Flag multi-alternative menus with boundary or out-of-hull choices."""
    rows = []
    boundary = []
    for s in src.sets():
        members = sorted(s)
        if len(members) < 2:
            continue
        outcome = src.outcome(s)
        points = [src.outcome([m]) for m in members]
        try:
            interior = relative_interior_check(outcome, points, tol)
            in_hull = True
        except NotInConvexHull:
            interior = False
            in_hull = False
        rows.append(
            BoundaryRow(members=tuple(members), interior=interior, in_hull=in_hull)
        )
        if not interior:
            boundary.append(tuple(members))

    outcome = recover(src, tol)
    single: bool | None = None
    if isinstance(outcome, Recovered):
        single = len(outcome.representation.rank_classes()) == 1
    contradictions = tuple(boundary) if single else ()
    return BoundaryReport(
        rows=tuple(rows),
        boundary_menus=tuple(boundary),
        contradictions=contradictions,
        single_class=single,
    )
