"""Kolmogorovian embeddability of CHSH behaviors.

A behavior embeds in a single probability space exactly when it is a convex
mixture of the 16 deterministic strategies ``(a, a', b, b')``.  That is a
linear feasibility problem, decided here with a small dense-tableau
simplex that runs over :class:`fractions.Fraction` (exact) or ``float``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .behavior import (
    MARGINAL_TOL,
    Behavior,
    MarginalReport,
    _ctx_index,
    check_marginal_laws,
    correlators,
)
from .scenario import CONTEXTS, OUTCOMES, outcome_index

FLOAT_TOL = 1e-9
FINE_BOUND = 2

# Lexicographic with +1 before -1, positions (a, a', b, b').
STRATEGIES: tuple[tuple[int, int, int, int], ...] = tuple(itertools.product((1, -1), repeat=4))

# Sign vectors over (AB, AB', A'B, A'B') with an odd number of -1 entries.
FINE_SIGNS: tuple[tuple[int, int, int, int], ...] = tuple(
    s for s in itertools.product((1, -1), repeat=4) if s.count(-1) % 2 == 1
)


def _row_index(ctx, a: int, b: int) -> int:
    return 4 * CONTEXTS.index(ctx) + OUTCOMES.index((a, b))


def constraint_matrix() -> np.ndarray:
    """16 x 16 0/1 matrix: row (context, a, b), column strategy."""
    m = np.zeros((16, 16), dtype=int)
    for j, (a, a2, b, b2) in enumerate(STRATEGIES):
        local = {"A": a, "A'": a2, "B": b, "B'": b2}
        for ctx in CONTEXTS:
            m[_row_index(ctx, local[ctx[0]], local[ctx[1]]), j] = 1
    return m


_CONSTRAINTS = constraint_matrix()


def behavior_vector(b: Behavior) -> list:
    out = [None] * 16
    for ctx in CONTEXTS:
        for a, bb in OUTCOMES:
            out[_row_index(ctx, a, bb)] = b.prob(ctx, a, bb)
    return out


# simplex ------------------------------------------------------------------

@dataclass
class FeasibilityResult:
    feasible: bool
    x: list          # one value per original column
    residual: object  # phase-1 optimum (sum of artificials)
    pivots: int


def phase_one(a_rows: Sequence[Sequence], rhs: Sequence, *, exact: bool, tol: float = FLOAT_TOL) -> FeasibilityResult:
    """Find ``x >= 0`` with ``A x = rhs`` by minimizing the sum of artificials.

    Dense tableau, Bland's rule for both entering (lowest column) and
    leaving (lowest basic variable among ratio ties) choices, so the method
    terminates without cycling.  In float mode a pivot element must exceed
    ``tol`` in magnitude and reduced costs within ``tol`` count as zero.
    Redundant equality rows are harmless: their artificials leave the phase
    at level zero.
    """
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    conv = Fraction if exact else float
    eps = 0 if exact else tol
    m, n = len(a_rows), len(a_rows[0])

    tab = []
    for i in range(m):
        row = [conv(v) for v in a_rows[i]]
        r = conv(rhs[i])
        if r < 0:
            row, r = [-v for v in row], -r
        art = [zero] * m
        art[i] = one
        tab.append(row + art + [r])
    basis = [n + i for i in range(m)]
    width = n + m
    # Objective row: reduced costs of minimizing the sum of artificials.
    cost = [zero] * (width + 1)
    for i in range(m):
        for j in range(n):
            cost[j] -= tab[i][j]
        cost[width] -= tab[i][width]

    pivots = 0
    while True:
        enter = next((j for j in range(width) if cost[j] < -eps), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            piv = tab[i][enter]
            if piv > eps:
                ratio = tab[i][width] / piv
                if (
                    best is None
                    or ratio < best - eps
                    or (abs(ratio - best) <= eps and basis[i] < basis[leave])
                ):
                    leave, best = i, ratio
        if leave is None:
            # Phase-one objective is bounded below by zero, so this column
            # only looked improving because of rounding.
            cost[enter] = zero
            continue
        prow = tab[leave]
        piv = prow[enter]
        prow = [v / piv for v in prow]
        tab[leave] = prow
        for i in range(m):
            if i != leave:
                f = tab[i][enter]
                if f != 0:
                    tab[i] = [v - f * w for v, w in zip(tab[i], prow)]
        f = cost[enter]
        cost = [v - f * w for v, w in zip(cost, prow)]
        basis[leave] = enter
        pivots += 1

    x = [zero] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = tab[i][width]
    residual = -cost[width]
    feasible = residual == 0 if exact else residual <= tol
    return FeasibilityResult(feasible, x, residual, pivots)


# models and verdicts ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KolmogorovModel:
    """Weights over :data:`STRATEGIES`; Fractions in exact mode, floats otherwise."""

    weights: tuple

    def __post_init__(self):
        w = tuple(self.weights)
        if len(w) != 16:
            raise ValueError(f"a model needs 16 weights, got {len(w)}")
        if any(v < 0 for v in w):
            raise ValueError("model weights must be non-negative")
        total = sum(w)
        exact = all(isinstance(v, Fraction) for v in w)
        if (exact and total != 1) or (not exact and abs(total - 1) > FLOAT_TOL):
            raise ValueError(f"model weights sum to {total}, expected 1")
        object.__setattr__(self, "weights", w)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.weights)

    def induced_tables(self) -> np.ndarray:
        dtype = object if self.is_exact else float
        t = np.zeros((2, 2, 2, 2), dtype=dtype)
        if dtype is object:
            t[...] = Fraction(0)
        for w, (a, a2, b, b2) in zip(self.weights, STRATEGIES):
            local = {"A": a, "A'": a2, "B": b, "B'": b2}
            for ctx in CONTEXTS:
                x, y = _ctx_index(ctx)
                t[x, y, outcome_index(local[ctx[0]]), outcome_index(local[ctx[1]])] += w
        return t

    def behavior(self) -> Behavior:
        return Behavior(self.induced_tables())

    def certificate(self) -> str:
        """16 lines ``a a' b b' weight`` in canonical strategy order."""
        lines = []
        for w, lam in zip(self.weights, STRATEGIES):
            signs = " ".join(f"{v:+d}" for v in lam)
            lines.append(f"{signs} {w if isinstance(w, Fraction) else repr(float(w))}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FineWitness:
    index: int          # 1-based position in FINE_SIGNS
    signs: tuple
    value: float

    @property
    def label(self) -> str:
        return fine_label(self.signs)


@dataclass(frozen=True, eq=False)
class EmbeddabilityResult:
    verdict: Literal["feasible", "infeasible"]
    exact: bool
    model: KolmogorovModel | None = None
    marginal_witness: MarginalReport | None = None
    fine_witness: FineWitness | None = None
    lp_residual: object = None

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"

    @property
    def witness_kind(self) -> str | None:
        if self.feasible:
            return None
        if self.marginal_witness is not None:
            return "marginal"
        if self.fine_witness is not None:
            return "fine"
        return "lp"


def fine_label(signs) -> str:
    names = ("E(A,B)", "E(A,B')", "E(A',B)", "E(A',B')")
    return " ".join(f"{'+' if s > 0 else '-'}{n}" for s, n in zip(signs, names))


def fine_values(e) -> list:
    return [sum(s * v for s, v in zip(signs, e)) for signs in FINE_SIGNS]


def fine_inequalities(b: Behavior) -> dict[str, object]:
    """The eight signed CHSH expressions, keyed by their sign pattern."""
    e = correlators(b)
    return {fine_label(s): v for s, v in zip(FINE_SIGNS, fine_values(e))}


def worst_fine(b: Behavior) -> FineWitness:
    vals = fine_values(correlators(b))
    k = max(range(len(vals)), key=lambda i: vals[i])
    v = vals[k]
    return FineWitness(k + 1, FINE_SIGNS[k], v if isinstance(v, Fraction) else float(v))


def _decide(b: Behavior, exact: bool, tol: float) -> FeasibilityResult:
    rows = _CONSTRAINTS.tolist()
    return phase_one(rows, behavior_vector(b), exact=exact, tol=tol)


def embed(
    b: Behavior,
    *,
    exact: bool | None = None,
    tolerance: float = FLOAT_TOL,
    marginal_tolerance: float = MARGINAL_TOL,
) -> EmbeddabilityResult:
    """Decide whether ``b`` is a mixture of deterministic strategies.

    ``exact=None`` picks rational arithmetic for rational behaviors and
    floats otherwise; ``exact=True`` insists on a rational behavior
    (``ValueError`` if the entries cannot be made exact).  Infeasible
    verdicts carry a marginal-law witness when signaling is present,
    otherwise the most violated Fine inequality.
    """
    if exact is None:
        exact = b.is_rational
    b = b.as_rational() if exact else b.as_float()
    res = _decide(b, exact, tolerance)
    if res.feasible:
        if exact:
            weights = tuple(res.x)
        else:
            w = np.clip(np.array(res.x, dtype=float), 0.0, None)
            weights = tuple(w / w.sum())
        return EmbeddabilityResult("feasible", exact, model=KolmogorovModel(weights), lp_residual=res.residual)

    marg = check_marginal_laws(b, 0 if exact else marginal_tolerance)
    fine = worst_fine(b)
    bound = FINE_BOUND if exact else FINE_BOUND + tolerance
    return EmbeddabilityResult(
        "infeasible",
        exact,
        marginal_witness=None if marg.satisfied else marg,
        fine_witness=fine if fine.value > bound else None,
        lp_residual=res.residual,
    )


def verify_model(m: KolmogorovModel, b: Behavior) -> float:
    """Largest |P_model - P_behavior| over contexts and outcomes."""
    diff = np.asarray(m.induced_tables(), dtype=object) - np.asarray(b.tables, dtype=object)
    return float(max(abs(v) for v in diff.flat))


def embeddability_equivalence_check(
    b: Behavior, *, exact: bool | None = None, tolerance: float = FLOAT_TOL
) -> bool:
    """LP verdict agrees with 'marginal laws hold and every Fine value <= 2'."""
    if exact is None:
        exact = b.is_rational
    bb = b.as_rational() if exact else b.as_float()
    lp = _decide(bb, exact, tolerance).feasible
    marg = check_marginal_laws(bb, 0 if exact else MARGINAL_TOL).satisfied
    bound = FINE_BOUND if exact else FINE_BOUND + tolerance
    fine_ok = all(v <= bound for v in fine_values(correlators(bb)))
    return lp == (marg and fine_ok)


# vertices of the no-signaling polytope --------------------------------------

def deterministic_behavior(strategy) -> Behavior:
    """Behavior of one deterministic strategy (exact)."""
    w = [Fraction(int(lam == tuple(strategy))) for lam in STRATEGIES]
    return KolmogorovModel(tuple(w)).behavior()


def pr_box(signs) -> Behavior:
    """Non-local vertex with uniform marginals and correlators ``signs``.

    ``signs`` must be one of :data:`FINE_SIGNS`; the box then reaches 4 on
    the matching Fine expression.
    """
    signs = tuple(signs)
    if signs not in FINE_SIGNS:
        raise ValueError("PR-box correlators need an odd number of -1 entries")
    half = Fraction(1, 2)
    t = np.full((2, 2, 2, 2), Fraction(0), dtype=object)
    for (x, y), e in zip([_ctx_index(c) for c in CONTEXTS], signs):
        for a, b in OUTCOMES:
            if a * b == e:
                t[x, y, outcome_index(a), outcome_index(b)] = half
    return Behavior(t)


def mixture(behaviors: Sequence[Behavior], weights: Sequence) -> Behavior:
    exact = all(b.is_rational for b in behaviors) and all(isinstance(w, Fraction) for w in weights)
    if exact:
        t = sum((w * b.tables for w, b in zip(weights, behaviors)), np.full((2, 2, 2, 2), Fraction(0), dtype=object))
    else:
        t = sum(float(w) * b.as_float().tables for w, b in zip(weights, behaviors))
    return Behavior(t)


def random_no_signaling_behavior(
    rng: np.random.Generator, *, exact: bool = False, max_vertices: int = 4, denominator_bits: int = 6
) -> Behavior:
    """Random mixture of deterministic strategies and PR boxes.

    In ``exact`` mode the weights are dyadic rationals with denominator
    ``2**denominator_bits``.
    """
    k = int(rng.integers(1, max_vertices + 1))
    verts = []
    for _ in range(k):
        if rng.random() < 0.5:
            verts.append(deterministic_behavior(STRATEGIES[int(rng.integers(16))]))
        else:
            verts.append(pr_box(FINE_SIGNS[int(rng.integers(8))]))
    if exact:
        denom = 2**denominator_bits
        cuts = sorted(int(c) for c in rng.integers(0, denom + 1, size=k - 1))
        bounds = [0, *cuts, denom]
        weights = [Fraction(hi - lo, denom) for lo, hi in zip(bounds, bounds[1:])]
    else:
        weights = list(rng.dirichlet(np.ones(k)))
    return mixture(verts, weights)
