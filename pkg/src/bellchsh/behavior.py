"""Outcome-probability tables, the 16-outcome grand measurement, and marginal laws.

A :class:`Behavior` holds ``P(a, b | x, y)`` in an array of shape
``(2, 2, 2, 2)`` indexed ``[x, y, a, b]`` where ``x`` picks A/A', ``y``
picks B/B' and outcome index 0 is ``+1``, index 1 is ``-1``.  Entries are
floats, or :class:`fractions.Fraction` objects for exact (rational) work.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg as la
from .errors import IncompatibleObservablesError, MissingObservablesError, ValidationError
from .scenario import (
    ALICE,
    BOB,
    CONTEXTS,
    OUTCOMES,
    BellScenario,
    context_label,
    outcome_index,
    parse_context,
)

NORMALIZATION_TOL = 1e-9
NEGATIVE_DUST = 1e-12
MARGINAL_TOL = 1e-9
COMMUTING_TOL = 1e-10
IDEMPOTENT_TOL = 1e-10
SIGNS = np.array([1, -1])


def _ctx_index(ctx) -> tuple[int, int]:
    return ALICE.index(ctx[0]), BOB.index(ctx[1])


def _clean_distribution(p: np.ndarray, axes, what: str) -> np.ndarray:
    """Clamp floating dust in (-1e-12, 0) to 0 and renormalize over ``axes``."""
    if p.dtype == object:
        if np.any(p < 0):
            raise ValidationError(f"{what} has negative entries")
        sums = p.sum(axis=axes)
        if np.any(sums != 1):
            raise ValidationError(f"{what} does not sum exactly to 1")
        return p
    p = np.array(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{what} has non-finite entries")
    if p.min() < -NEGATIVE_DUST:
        raise ValidationError(f"{what} has a negative probability {p.min():.3e}")
    p[p < 0] = 0.0
    sums = p.sum(axis=axes, keepdims=True)
    worst = float(np.max(np.abs(sums - 1)))
    if worst > NORMALIZATION_TOL:
        raise ValidationError(f"{what} is not normalized (off by {worst:.3e})")
    return p / sums


def _as_probability_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    if all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in arr.flat):
        return np.vectorize(Fraction, otypes=[object])(arr)
    return np.asarray(values, dtype=float)


@dataclass(frozen=True, eq=False)
class Behavior:
    tables: np.ndarray

    def __post_init__(self):
        t = _as_probability_array(self.tables)
        if t.shape != (2, 2, 2, 2):
            raise ValidationError(f"behavior tables must have shape (2, 2, 2, 2), got {t.shape}")
        t = _clean_distribution(t, (2, 3), "behavior table")
        t.setflags(write=False)
        object.__setattr__(self, "tables", t)

    @classmethod
    def from_contexts(cls, tables: dict) -> Behavior:
        """Build from ``{context: {(a, b): p}}`` or ``{context: 2x2 array}``."""
        t = np.empty((2, 2, 2, 2), dtype=object)
        for ctx in CONTEXTS:
            tab = tables[ctx]
            x, y = _ctx_index(ctx)
            for a, b in OUTCOMES:
                v = tab[(a, b)] if isinstance(tab, dict) else tab[outcome_index(a)][outcome_index(b)]
                t[x, y, outcome_index(a), outcome_index(b)] = v
        return cls(t)

    @classmethod
    def uniform(cls) -> Behavior:
        return cls(np.full((2, 2, 2, 2), Fraction(1, 4), dtype=object))

    @property
    def is_rational(self) -> bool:
        return self.tables.dtype == object

    def table(self, ctx) -> np.ndarray:
        return self.tables[_ctx_index(ctx)]

    def prob(self, ctx, a: int, b: int):
        return self.table(ctx)[outcome_index(a), outcome_index(b)]

    def as_float(self) -> Behavior:
        if not self.is_rational:
            return self
        return Behavior(self.tables.astype(float))

    def as_rational(self, max_denominator: int = 2**20) -> Behavior:
        """Exact version of this behavior.

        Float entries must be exactly representable as fractions with
        denominator at most ``max_denominator`` and every table must then
        sum exactly to 1; otherwise ``ValueError`` is raised.
        """
        if self.is_rational:
            return self
        out = np.empty(self.tables.shape, dtype=object)
        for idx, v in np.ndenumerate(self.tables):
            f = Fraction(v).limit_denominator(max_denominator)
            if f != Fraction(v):
                raise ValueError(f"entry {v!r} is not a rational number with small denominator")
            out[idx] = f
        if np.any(out.sum(axis=(2, 3)) != 1):
            raise ValueError("tables do not sum exactly to 1 in rational arithmetic")
        return Behavior(out)


@dataclass(frozen=True, eq=False)
class GrandDistribution:
    """Probabilities of the 16 outcomes ``((a, a'), (b, b'))``, shape ``(2, 2, 2, 2)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _as_probability_array(self.probs)
        if p.shape != (2, 2, 2, 2):
            raise ValidationError(f"grand distribution must have shape (2, 2, 2, 2), got {p.shape}")
        p = _clean_distribution(p, (0, 1, 2, 3), "grand distribution")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def prob(self, a: int, a2: int, b: int, b2: int):
        return self.probs[outcome_index(a), outcome_index(a2), outcome_index(b), outcome_index(b2)]


@dataclass(frozen=True)
class MarginalReport:
    """Signaling discrepancies of a behavior.

    For each party and setting the discrepancy is the L1 distance between
    that party's outcome marginals under the other party's two settings,
    ``sum_a |P(a|x,B) - P(a|x,B')|``; for two outcomes this is the change
    in the marginal mean of the observable.
    """

    alice: dict[str, float]
    bob: dict[str, float]
    tolerance: float
    thresholds: dict[str, float] | None = None
    insufficient_statistics: bool = False
    min_shots: int | None = field(default=None)

    @property
    def alice_max(self) -> float:
        return max(self.alice.values())

    @property
    def bob_max(self) -> float:
        return max(self.bob.values())

    @property
    def max_discrepancy(self) -> float:
        return max(self.alice_max, self.bob_max)

    @property
    def satisfied(self) -> bool | None:
        """``None`` when the verdict is withheld for lack of statistics."""
        if self.insufficient_statistics:
            return None
        if self.thresholds is None:
            return self.alice_max <= self.tolerance and self.bob_max <= self.tolerance
        every = {**self.alice, **self.bob}
        return all(every[k] <= self.thresholds[k] for k in every)

    def to_dict(self) -> dict:
        return {
            "alice": self.alice,
            "bob": self.bob,
            "alice_max": self.alice_max,
            "bob_max": self.bob_max,
            "max_discrepancy": self.max_discrepancy,
            "tolerance": self.tolerance,
            "thresholds": self.thresholds,
            "insufficient_statistics": self.insufficient_statistics,
            "satisfied": self.satisfied,
        }


def marginal_discrepancies(tables: np.ndarray) -> tuple[dict[str, float], dict[str, float]]:
    t = np.asarray(tables)
    alice_marg = t.sum(axis=3)  # [x, y, a]
    bob_marg = t.sum(axis=2)    # [x, y, b]
    alice = {x: float(np.abs(alice_marg[i, 0] - alice_marg[i, 1]).sum()) for i, x in enumerate(ALICE)}
    bob = {y: float(np.abs(bob_marg[0, j] - bob_marg[1, j]).sum()) for j, y in enumerate(BOB)}
    return alice, bob


def check_marginal_laws(b: Behavior, tolerance: float = MARGINAL_TOL) -> MarginalReport:
    alice, bob = marginal_discrepancies(b.tables)
    return MarginalReport(alice, bob, tolerance)


def behavior_from_scenario(s: BellScenario) -> Behavior:
    t = np.zeros((2, 2, 2, 2))
    for ctx, jm in s.measurements.items():
        x, y = _ctx_index(ctx)
        for (a, b), proj in jm.projectors.items():
            t[x, y, outcome_index(a), outcome_index(b)] = la.expectation(s.state, proj)
    return Behavior(t)


def correlators(b: Behavior) -> np.ndarray:
    """``E(x, y) = sum a b P(a, b | x, y)`` in context order (AB, AB', A'B, A'B')."""
    sign = np.outer(SIGNS, SIGNS)
    return np.array([(b.table(ctx) * sign).sum() for ctx in CONTEXTS], dtype=b.tables.dtype)


def chsh_value(e) -> float:
    return e[0] + e[1] + e[2] - e[3]


def chsh_from_behavior(b: Behavior):
    return chsh_value(correlators(b))


def grand_measurement(s: BellScenario) -> GrandDistribution:
    """Distribution of the single 16-outcome measurement available to commuting locals."""
    if not s.is_product:
        raise MissingObservablesError("grand measurement needs product-form local observables")
    a, a2, b, b2 = (s.observables[k] for k in ("A", "A'", "B", "B'"))
    norms = {
        "[A,A']": la.frobenius(la.commutator(a.matrix, a2.matrix)),
        "[B,B']": la.frobenius(la.commutator(b.matrix, b2.matrix)),
    }
    if max(norms.values()) > COMMUTING_TOL:
        raise IncompatibleObservablesError(norms, COMMUTING_TOL)

    def joint_local(p, q, name):
        prod = p @ q
        defect = la.frobenius(prod @ prod - prod)
        if defect > IDEMPOTENT_TOL:
            raise IncompatibleObservablesError({f"idempotence of {name}": defect}, IDEMPOTENT_TOL)
        # Exactly Hermitian when p and q commute; symmetrize away the rounding.
        return (prod + prod.conj().T) / 2

    alice = {
        (x, x2): joint_local(a.projector(x), a2.projector(x2), f"P_A={x} P_A'={x2}")
        for x in (1, -1) for x2 in (1, -1)
    }
    bob = {
        (y, y2): joint_local(b.projector(y), b2.projector(y2), f"P_B={y} P_B'={y2}")
        for y in (1, -1) for y2 in (1, -1)
    }
    p = np.zeros((2, 2, 2, 2))
    for (x, x2), pa in alice.items():
        for (y, y2), pb in bob.items():
            idx = (outcome_index(x), outcome_index(x2), outcome_index(y), outcome_index(y2))
            p[idx] = la.expectation(s.state, la.tensor(pa, pb))
    return GrandDistribution(p)


def marginalize(g: GrandDistribution) -> Behavior:
    """Sum out the unmeasured setting of each party, e.g. P(a,b|A,B) = sum_{a',b'} P(a,a',b,b')."""
    p = g.probs
    t = np.empty((2, 2, 2, 2), dtype=p.dtype)
    t[0, 0] = p.sum(axis=(1, 3))
    t[0, 1] = p.sum(axis=(1, 2))
    t[1, 0] = p.sum(axis=(0, 3))
    t[1, 1] = p.sum(axis=(0, 2))
    return Behavior(t)


# plain-text table format --------------------------------------------------

def _fmt_prob(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return f"{float(v):.12g}"


def _fmt_sign(v: int) -> str:
    return "+" if v == 1 else "-"


def format_tables(tables: np.ndarray, fmt=_fmt_prob) -> str:
    """One block per context: a ``context X Y`` line and four ``a b value`` lines."""
    lines = []
    for ctx in CONTEXTS:
        x, y = _ctx_index(ctx)
        lines.append(f"context {ctx[0]} {ctx[1]}")
        for a, b in OUTCOMES:
            v = tables[x, y, outcome_index(a), outcome_index(b)]
            lines.append(f"{_fmt_sign(a)} {_fmt_sign(b)} {fmt(v)}")
        lines.append("")
    return "\n".join(lines)


def format_behavior(b: Behavior) -> str:
    return format_tables(b.tables)


_SIGN = {"+": 1, "-": -1, "+1": 1, "-1": -1}
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/\d+)?$")


class TableFormatError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_number(token: str) -> Fraction:
    if not _NUMBER.match(token):
        raise ValueError(f"not a number: {token!r}")
    return Fraction(token)


def parse_tables(lines, *, first_line: int = 1, value_parser=parse_number) -> dict:
    """Parse ``context`` blocks; returns ``{context: {(a, b): value}}``.

    ``lines`` is an iterable of raw text lines; blank lines and ``#``
    comments are skipped.  Errors carry the 1-based line number.
    """
    out: dict = {}
    current = None
    for offset, raw in enumerate(lines):
        lineno = first_line + offset
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tok = text.split()
        if tok[0] == "context":
            if len(tok) != 3:
                raise TableFormatError("expected 'context <X> <Y>'", lineno)
            try:
                current = parse_context(tok[1], tok[2])
            except ValueError as exc:
                raise TableFormatError(str(exc), lineno) from None
            if current in out:
                raise TableFormatError(f"duplicate context {context_label(current)}", lineno)
            out[current] = {}
            continue
        if current is None:
            raise TableFormatError("table entry before any 'context' line", lineno)
        if len(tok) != 3 or tok[0] not in _SIGN or tok[1] not in _SIGN:
            raise TableFormatError("expected '<+|-> <+|-> <value>'", lineno)
        key = (_SIGN[tok[0]], _SIGN[tok[1]])
        if key in out[current]:
            raise TableFormatError(f"duplicate outcome {tok[0]} {tok[1]}", lineno)
        try:
            out[current][key] = value_parser(tok[2])
        except ValueError as exc:
            raise TableFormatError(str(exc), lineno) from None
    for ctx in CONTEXTS:
        if ctx not in out:
            raise TableFormatError(f"missing context {context_label(ctx)}")
        if len(out[ctx]) != 4:
            raise TableFormatError(f"context {context_label(ctx)} needs all four outcomes")
    return out


def parse_behavior(text: str, *, first_line: int = 1) -> Behavior:
    """Inverse of :func:`format_behavior`.

    Entries are read exactly; when every table sums exactly to 1 the
    behavior is kept rational, otherwise it is converted to floats.
    """
    tables = parse_tables(text.splitlines(), first_line=first_line)
    try:
        return Behavior.from_contexts(tables)
    except ValidationError:
        floats = {c: {k: float(v) for k, v in t.items()} for c, t in tables.items()}
        return Behavior.from_contexts(floats)
