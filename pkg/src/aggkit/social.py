"""Social aggregation of utilities: Pareto tests and weight recovery.

Utilities over a common finite alternative set are normalized against an
agreement direction v (an alternative mixture everyone strictly prefers
to some baseline): u maps to u / <u, v>, putting every agent on the
hyperplane <., v> = 1.  On that hyperplane, respecting unanimous
(extended Pareto) comparisons is the same as every coalition utility
being a strictly positive combination of its parts' utilities, which is
in turn the strict averaging axiom for the normalized vectors.  The
checks here either exhibit the positive combination or a separating
functional certifying its absence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConstantUtility,
    MinimalAgreementViolated,
    MissingDataError,
    ProfileConstructionFailed,
    ResidualTooLarge,
    UnknownFeature,
)
from .geometry import (
    DEFAULT_TOL,
    SegmentKind,
    Tolerance,
    Vector,
    affine_dimension,
    as_point,
    segment_coefficient,
)
from .model import (
    AxiomMode,
    AxiomReport,
    DatasetSource,
    Representation,
    check_axiom,
    evaluate,
    feature_set,
)
from .recovery import (
    MissingData,
    NonRepresentable,
    Recovered,
    RecoveryOutcome,
    recover,
)

__all__ = [
    "normalize_to_H",
    "InCone",
    "Certificate",
    "Collinear",
    "FarkasOutcome",
    "check_consistency_pair",
    "verify_certificate",
    "aggregate_coalition",
    "ExtendedParetoReport",
    "check_extended_pareto",
    "GswfRecovery",
    "recover_gswf_weights",
    "relative_utilitarian_weight",
    "StateDependentResult",
    "recover_state_dependent",
]


def normalize_to_H(
    u: Sequence[float] | Vector,
    v: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
    who: str = "utility",
) -> Vector:
    """Scale a utility vector onto the hyperplane <u, v> = 1.

    Raises MinimalAgreementViolated when <u, v> is not strictly positive
    beyond the gate: such an agent does not strictly prefer the
    agreement mixture, so the normalization (and the aggregation theory
    behind it) does not apply.
    """
    u = as_point(u)
    v = as_point(v, dim=u.size)
    s = float(np.dot(u, v))
    if s <= tol.gate(float(np.linalg.norm(u)) * float(np.linalg.norm(v))):
        raise MinimalAgreementViolated(who, s)
    return u / s


@dataclass(frozen=True)
class InCone:
    """u_AB is a strictly positive combination alpha u_A + beta u_B."""

    alpha: float
    beta: float
    residual: float


@dataclass(frozen=True)
class Certificate:
    """A functional z with z.u_A >= 0, z.u_B >= 0 but z.u_AB not positive.

    Any such z names a welfare comparison both parts weakly endorse (one
    strictly, in the boundary case) that the coalition fails to endorse.
    """

    z: tuple[float, ...]
    dot_a: float
    dot_b: float
    dot_ab: float


@dataclass(frozen=True)
class Collinear:
    """u_A and u_B point the same way; the pair check degenerates."""

    ratio: float  # |u_B| / |u_A| along the common ray


FarkasOutcome = InCone | Certificate | Collinear

# Rounding allowance for the sign conditions of a constructed certificate.
# This is pure floating-point slack, far below any user tolerance.
_SIGN_EPS = 1e-12


def verify_certificate(
    z: Sequence[float] | Vector,
    u_a: Sequence[float] | Vector,
    u_b: Sequence[float] | Vector,
    u_ab: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Check the defining sign conditions of a separation certificate.

    Generic case: z.u_A >= 0, z.u_B >= 0 (up to rounding) and
    z.u_AB < 0 beyond the gate.  Boundary case: z.u_AB vanishes within
    the gate while one of z.u_A, z.u_B is strictly positive beyond it,
    witnessing a coalition indifferent where a part is strict.
    """
    z = as_point(z)
    u_a = as_point(u_a, dim=z.size)
    u_b = as_point(u_b, dim=z.size)
    u_ab = as_point(u_ab, dim=z.size)
    nz = float(np.linalg.norm(z))
    if nz <= 0.0:
        return False
    da = float(np.dot(z, u_a))
    db = float(np.dot(z, u_b))
    dab = float(np.dot(z, u_ab))
    eps_a = _SIGN_EPS * nz * float(np.linalg.norm(u_a))
    eps_b = _SIGN_EPS * nz * float(np.linalg.norm(u_b))
    if da < -eps_a or db < -eps_b:
        return False
    g = tol.gate(nz * float(np.linalg.norm(u_ab)), nz)
    if dab < -g:
        return True
    if abs(dab) <= g:
        ga = tol.gate(nz * float(np.linalg.norm(u_a)), nz)
        gb = tol.gate(nz * float(np.linalg.norm(u_b)), nz)
        return da > ga or db > gb
    return False


def check_consistency_pair(
    u_a: Sequence[float] | Vector,
    u_b: Sequence[float] | Vector,
    u_ab: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
) -> FarkasOutcome:
    """Classify a coalition utility against its two parts.

    Either u_AB decomposes as alpha u_A + beta u_B with alpha, beta
    strictly positive (InCone), or a certificate functional separates it
    from the open cone.  Parallel u_A, u_B short-circuit to Collinear.
    Exactly one verdict is returned, and a returned certificate always
    passes :func:`verify_certificate`.
    """
    u_a = as_point(u_a)
    u_b = as_point(u_b, dim=u_a.size)
    u_ab = as_point(u_ab, dim=u_a.size)
    na = float(np.linalg.norm(u_a))
    nb = float(np.linalg.norm(u_b))
    nab = float(np.linalg.norm(u_ab))
    if na <= tol.abs_tol or nb <= tol.abs_tol:
        raise ResidualTooLarge("a zero utility vector cannot anchor the cone test")

    perp_b = u_b - (float(np.dot(u_b, u_a)) / (na * na)) * u_a
    if float(np.linalg.norm(perp_b)) <= tol.gate(nb):
        same_way = float(np.dot(u_a, u_b)) > 0
        if not same_way:
            raise ResidualTooLarge(
                "anti-parallel part utilities violate minimal agreement"
            )
        return Collinear(ratio=nb / na)

    # Least-squares decomposition u_AB = alpha u_A + beta u_B + r, r in the
    # orthogonal complement of span{u_A, u_B}.
    basis = np.column_stack([u_a, u_b])
    coef, *_ = np.linalg.lstsq(basis, u_ab, rcond=None)
    alpha, beta = float(coef[0]), float(coef[1])
    in_span = basis @ coef
    r = u_ab - in_span
    r_norm = float(np.linalg.norm(r))
    g = tol.gate(nab, na, nb)

    if r_norm <= g:
        slack = tol.lam_slack
        if alpha > slack and beta > slack:
            return InCone(alpha=alpha, beta=beta, residual=r_norm)
        candidates = [perp_b, u_a - (float(np.dot(u_a, u_b)) / (nb * nb)) * u_b]
    else:
        # Out of span: the residual direction itself separates.
        candidates = [
            -r,
            perp_b,
            u_a - (float(np.dot(u_a, u_b)) / (nb * nb)) * u_b,
        ]

    for cand in candidates:
        c_norm = float(np.linalg.norm(cand))
        if c_norm <= 0.0:
            continue
        z = cand / c_norm
        if verify_certificate(z, u_a, u_b, u_ab, tol):
            return Certificate(
                z=tuple(float(x) for x in z),
                dot_a=float(np.dot(z, u_a)),
                dot_b=float(np.dot(z, u_b)),
                dot_ab=float(np.dot(z, u_ab)),
            )
    raise ResidualTooLarge(
        "no candidate certificate validated; the inputs look corrupt"
    )


def aggregate_coalition(
    weights: Mapping[str, float],
    utilities: Mapping[str, Sequence[float] | Vector],
    coalition: Iterable[str] | str,
    v: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
) -> Vector:
    """Weighted average of the coalition members' normalized utilities.

    The result lands on the hyperplane <., v> = 1 automatically.
    """
    fs = feature_set(coalition)
    unknown = fs - set(weights)
    if unknown:
        raise UnknownFeature(f"unknown members {sorted(unknown)}")
    num = None
    den = 0.0
    for m in sorted(fs):
        w = float(weights[m])
        if w <= 0.0:
            raise ValueError(f"weight of {m!r} must be strictly positive")
        u = normalize_to_H(utilities[m], v, tol, who=m)
        num = w * u if num is None else num + w * u
        den += w
    assert num is not None
    return num / den


@dataclass(frozen=True)
class ParetoViolation:
    part_a: tuple[str, ...]
    part_b: tuple[str, ...]
    union: tuple[str, ...]
    farkas: FarkasOutcome


@dataclass(frozen=True)
class ExtendedParetoReport:
    """Outcome of the extended Pareto test on one coalition table."""

    satisfied: bool
    axiom: AxiomReport
    violations: tuple[ParetoViolation, ...]
    weights: Mapping[str, float] | None
    recovery: RecoveryOutcome | None

    def summary(self) -> str:
        verdict = "satisfied" if self.satisfied else "violated"
        return (
            f"extended Pareto {verdict}: {len(self.axiom.checks)} coalition "
            f"splits checked, {len(self.violations)} violations"
        )


def check_extended_pareto(
    src: DatasetSource,
    v: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
) -> ExtendedParetoReport:
    """Test a table of coalition utilities for extended Pareto.

    All utilities are normalized against ``v`` first; the strict
    averaging check then runs on the normalized table, and every failed
    split is classified by the cone test so the report carries either
    the positive decomposition or a separating certificate.  When the
    table passes, recovery supplies the social weights.
    """
    v = as_point(v, dim=src.dimension)
    normalized: dict[frozenset, Vector] = {}
    for s in src.sets():
        label = ",".join(sorted(s))
        normalized[s] = normalize_to_H(src.outcome(s), v, tol, who=label)
    norm_src = DatasetSource(src.dimension, normalized)

    axiom = check_axiom(norm_src, AxiomMode.STRICT, tol)
    violations = []
    for chk in axiom.violations:
        farkas = check_consistency_pair(
            norm_src.outcome(chk.set_a),
            norm_src.outcome(chk.set_b),
            norm_src.outcome(chk.union),
            tol,
        )
        violations.append(
            ParetoViolation(
                part_a=chk.set_a,
                part_b=chk.set_b,
                union=chk.union,
                farkas=farkas,
            )
        )

    # The extended Pareto property is exactly the strict averaging axiom on
    # the normalized table; weights are a bonus that needs recovery to work.
    weights = None
    recovery: RecoveryOutcome | None = None
    if axiom.satisfied:
        recovery = recover(norm_src, tol)
        if isinstance(recovery, Recovered):
            if len(recovery.representation.rank_classes()) == 1:
                weights = recovery.representation.weights
    return ExtendedParetoReport(
        satisfied=axiom.satisfied,
        axiom=axiom,
        violations=tuple(violations),
        weights=weights,
        recovery=recovery,
    )


GswfOracle = Callable[[Mapping[str, str], frozenset], Sequence[float]]


@dataclass(frozen=True)
class GswfRecovery:
    """Weights w(individual, preference) recovered from a welfare oracle."""

    weights: Mapping[tuple[str, str], float]
    reference_preference: str
    reference_individual: str
    validation_residuals: tuple[tuple[str, float], ...]
    max_residual: float


def _fill_profile(
    fixed: Mapping[str, str],
    individuals: Sequence[str],
    normalized: Mapping[str, Vector],
    tol: Tolerance,
) -> dict[str, str]:
    """Complete a partial profile so its utilities do not sit on one line.

    Remaining individuals cycle through the preference library; the
    completed profile must put at least three pairwise distinct,
    non-collinear normalized utilities on the table, which the witness
    constructions downstream rely on.
    """
    prefs = sorted(normalized)
    profile = dict(fixed)
    free = [i for i in individuals if i not in profile]
    for idx, ind in enumerate(free):
        profile[ind] = prefs[idx % len(prefs)]
    points = [normalized[r] for r in profile.values()]
    if affine_dimension(points, tol) < 2:
        for ind in free:
            for r in prefs:
                profile[ind] = r
                points = [normalized[p] for p in profile.values()]
                if affine_dimension(points, tol) >= 2:
                    return profile
        raise ProfileConstructionFailed(
            "the preference library cannot produce a profile off a single line"
        )
    return profile


def recover_gswf_weights(
    oracle: GswfOracle,
    individuals: Iterable[str],
    preference_library: Mapping[str, Sequence[float] | Vector],
    v: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
    validation: Sequence[tuple[Mapping[str, str], Iterable[str]]] = (),
) -> GswfRecovery:
    """Recover welfare weights from a profile-dependent aggregation oracle.

    The oracle maps (profile, coalition) to the coalition's utility.
    Weights are anchored at the lexicographically smallest preference
    r0 and individual i0 with w(i0, r0) = 1, and spread in three stages:
    first w(i, r) for the other individuals against the anchored i0 via
    the pair coalition {i0, i}; then w(i, r0) through a bridge
    individual already weighted at some other preference; finally
    w(i0, r) through the second individual carrying r0.  Every step
    reads one segment coefficient of a two-member coalition.

    Needs at least four individuals and a library of at least two
    preferences whose normalized utilities span a plane with the
    profiles used (ProfileConstructionFailed otherwise).
    """
    inds = tuple(sorted(individuals))
    if len(inds) < 4:
        raise ValueError("weight recovery needs at least four individuals")
    v = as_point(v)
    normalized: dict[str, Vector] = {}
    for rid in sorted(preference_library):
        normalized[rid] = normalize_to_H(
            preference_library[rid], v, tol, who=f"preference {rid}"
        )
    if len(normalized) < 2:
        raise ValueError("the preference library needs at least two preferences")
    for r1, r2 in itertools.combinations(sorted(normalized), 2):
        if tol.close(normalized[r1], normalized[r2]):
            raise ValueError(
                f"preferences {r1!r} and {r2!r} have identical normalized utilities"
            )

    prefs = tuple(sorted(normalized))
    r0 = prefs[0]
    i0 = inds[0]
    dim = normalized[r0].size

    def ask(profile: Mapping[str, str], coalition: Iterable[str]) -> Vector:
        out = oracle(profile, frozenset(coalition))
        return normalize_to_H(out, v, tol, who="oracle output")

    def pair_lambda(profile: Mapping[str, str], a: str, b: str) -> float:
        """Coefficient of a's utility in the {a, b} coalition outcome."""
        ua = normalized[profile[a]]
        ub = normalized[profile[b]]
        agg = ask(profile, [a, b])
        pos = segment_coefficient(agg, ua, ub, tol)
        if pos.kind is not SegmentKind.ON_SEGMENT or pos.lam is None:
            raise ResidualTooLarge(
                f"coalition {{{a},{b}}} outcome is not a mixture of its members"
            )
        lam = pos.lam
        if lam <= tol.lam_slack or lam >= 1.0 - tol.lam_slack:
            raise ResidualTooLarge(
                f"coalition {{{a},{b}}} outcome sits at an endpoint"
            )
        return lam

    weights: dict[tuple[str, str], float] = {(i0, r0): 1.0}

    # Stage one: w(i, r) against the anchor for r away from r0.
    for i in inds[1:]:
        for r in prefs[1:]:
            profile = _fill_profile({i0: r0, i: r}, inds, normalized, tol)
            lam = pair_lambda(profile, i0, i)
            weights[(i, r)] = (1.0 - lam) / lam

    # Stage two: w(i, r0) through a bridge individual at another preference.
    for i in inds[1:]:
        bridge = next(j for j in inds[1:] if j != i)
        r_b = prefs[1]
        profile = _fill_profile({bridge: r_b, i: r0}, inds, normalized, tol)
        lam = pair_lambda(profile, bridge, i)
        weights[(i, r0)] = weights[(bridge, r_b)] * (1.0 - lam) / lam

    # Stage three: w(i0, r) using the second individual now carrying r0.
    i1 = inds[1]
    for r in prefs[1:]:
        profile = _fill_profile({i0: r, i1: r0}, inds, normalized, tol)
        lam = pair_lambda(profile, i0, i1)
        weights[(i0, r)] = weights[(i1, r0)] * lam / (1.0 - lam)

    residuals = []
    worst = 0.0
    for profile, coalition in validation:
        fs = feature_set(coalition)
        missing = [i for i in fs if (i, profile[i]) not in weights]
        if missing:
            raise MissingDataError(
                [(i,) for i in missing],
                f"no recovered weight for individuals {missing} at their profile",
            )
        num = np.zeros(dim)
        den = 0.0
        for i in sorted(fs):
            w = weights[(i, profile[i])]
            num += w * normalized[profile[i]]
            den += w
        predicted = num / den
        observed = ask(profile, fs)
        rr = float(np.linalg.norm(observed - predicted))
        label = "{" + ",".join(sorted(fs)) + "}"
        residuals.append((label, rr))
        worst = max(worst, rr)

    return GswfRecovery(
        weights=weights,
        reference_preference=r0,
        reference_individual=i0,
        validation_residuals=tuple(residuals),
        max_residual=worst,
    )


def relative_utilitarian_weight(
    u: Sequence[float] | Vector, tol: Tolerance = DEFAULT_TOL
) -> float:
    """Weight 1 / (max u - min u) of zero-one rescaled utilitarianism.

    Aggregating with these weights is the same as summing utilities
    rescaled to [0, 1].  Raises ConstantUtility when the range vanishes.
    """
    u = as_point(u)
    spread = float(u.max() - u.min())
    if spread <= tol.gate(float(np.abs(u).max()) if u.size else 0.0, 1.0):
        raise ConstantUtility(f"utility range {spread!r} is too small to rescale")
    return 1.0 / spread


@dataclass(frozen=True)
class StateDependentRepresentation:
    """Positive state probabilities plus per-state normalized utilities."""

    probabilities: Mapping[str, float]
    utilities: Mapping[str, Vector]
    verification: tuple[tuple[tuple[str, ...], float], ...]
    max_residual: float
    indeterminate: bool


StateDependentResult = StateDependentRepresentation | NonRepresentable | MissingData


def recover_state_dependent(
    src: DatasetSource,
    v: Sequence[float] | Vector,
    tol: Tolerance = DEFAULT_TOL,
) -> StateDependentResult:
    """Recover state probabilities from event-conditional utilities.

    Events are feature sets of states; the recorded outcome of an event
    is the conditional utility given that event, normalized against
    ``v``.  Treating states as features, core recovery yields weights
    whose normalization is the (full-support) state probability, and
    conditioning is then ordinary Bayes:  u(A) = sum of P(s)/P(A) u(s).
    A multi-tier recovered order means some state would need zero
    probability, which is returned as the recovery's witness.
    """
    v = as_point(v, dim=src.dimension)
    normalized: dict[frozenset, Vector] = {}
    for s in src.sets():
        label = ",".join(sorted(s))
        normalized[s] = normalize_to_H(src.outcome(s), v, tol, who=label)
    norm_src = DatasetSource(src.dimension, normalized)

    outcome = recover(norm_src, tol)
    if isinstance(outcome, (NonRepresentable, MissingData)):
        return outcome
    rep = outcome.representation
    classes = rep.rank_classes()
    if len(classes) > 1:
        high = sorted(classes[0])[0]
        low = sorted(classes[-1])[0]
        farkas = None
        pair = frozenset([high, low])
        if norm_src.has(pair):
            farkas = check_consistency_pair(
                norm_src.outcome([high]),
                norm_src.outcome([low]),
                norm_src.outcome(pair),
                tol,
            )
        from .recovery import ContradictionWitness, RatioDerivation

        witness = ContradictionWitness(
            pair=(high, low),
            first=RatioDerivation(
                pair=(high, low),
                ratio=math.inf,
                via=(tuple(sorted(pair)),),
                note=(
                    "conditional on the pair ignores one state entirely"
                    + (f"; separation: {farkas!r}" if farkas is not None else "")
                ),
            ),
            second=RatioDerivation(
                pair=(high, low),
                ratio=math.nan,
                via=(),
                note="state probabilities must be strictly positive",
            ),
        )
        return NonRepresentable(witness=witness)

    total = sum(rep.weights[s] for s in rep.features())
    probabilities = {s: rep.weights[s] / total for s in rep.features()}
    verification = tuple(
        (row.members, row.residual) for row in outcome.verification
    )
    return StateDependentRepresentation(
        probabilities=probabilities,
        utilities={s: rep.outcomes[s] for s in rep.features()},
        verification=verification,
        max_residual=outcome.max_residual,
        indeterminate=bool(outcome.indeterminate_classes),
    )
