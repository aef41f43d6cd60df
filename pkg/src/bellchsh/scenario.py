"""Bell-CHSH measurement setups and the operator identities they obey.

Local observables are dichotomic (spectrum in {+1, -1}).  Outcome ``+1`` is
index 0 and ``-1`` is index 1 everywhere in the package.  The four contexts
are always ordered ``(A,B), (A,B'), (A',B), (A',B')``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from . import linalg as la
from .errors import (
    DimensionError,
    MissingObservablesError,
    NotDichotomicError,
    ValidationError,
)

ALICE = ("A", "A'")
BOB = ("B", "B'")
CONTEXTS: tuple[tuple[str, str], ...] = tuple(itertools.product(ALICE, BOB))
OUTCOMES: tuple[tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))

DICHOTOMIC_TOL = 1e-10
PURE_NORM_TOL = 1e-12
TRACE_TOL = 1e-12
DENSITY_EIG_TOL = 1e-10
PVM_TOL = 1e-10
COMMUTATOR_TABLE_TOL = 1e-10


def outcome_index(value: int) -> int:
    if value == 1:
        return 0
    if value == -1:
        return 1
    raise ValueError(f"outcome must be +1 or -1, got {value!r}")


def context_label(ctx: tuple[str, str]) -> str:
    return f"({ctx[0]},{ctx[1]})"


def parse_context(x: str, y: str) -> tuple[str, str]:
    ctx = (x, y)
    if ctx not in CONTEXTS:
        raise ValueError(f"unknown context {x} {y}; expected one of {[' '.join(c) for c in CONTEXTS]}")
    return ctx


@dataclass(frozen=True, eq=False)
class DichotomicObservable:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = la.require_hermitian(self.matrix, what=f"observable {self.label!r}")
        defect = square_defect(m)
        if defect > DICHOTOMIC_TOL:
            raise NotDichotomicError(self.label, defect, DICHOTOMIC_TOL)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def projector(self, outcome: int) -> np.ndarray:
        """Spectral projector onto the eigenspace of ``outcome`` (= (I +/- M)/2)."""
        sign = 1 if outcome_index(outcome) == 0 else -1
        return (la.identity(self.dim) + sign * self.matrix) / 2


def square_defect(m) -> float:
    m = la.as_matrix(m, square=True)
    return la.frobenius(m @ m - la.identity(m.shape[0]))


def pauli_angle(theta: float) -> np.ndarray:
    """``cos(theta) sigma_z + sin(theta) sigma_x``: a spin direction in the z-x plane."""
    return np.cos(theta) * la.SIGMA_Z + np.sin(theta) * la.SIGMA_X


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_signs(dim: int, rng: np.random.Generator, degenerate: bool = False) -> np.ndarray:
    """Random +/-1 diagonal; unless ``degenerate``, both signs occur (dim >= 2)."""
    if degenerate or dim == 1:
        return rng.choice([1.0, -1.0], size=dim)
    n_plus = int(rng.integers(1, dim))
    signs = np.array([1.0] * n_plus + [-1.0] * (dim - n_plus))
    return rng.permutation(signs)


def random_dichotomic(
    dim: int,
    rng: np.random.Generator,
    *,
    degenerate: bool = False,
    basis: np.ndarray | None = None,
    label: str = "",
) -> DichotomicObservable:
    """``V D V^dagger`` with ``V`` a random unitary (or ``basis``) and ``D`` a +/-1 diagonal."""
    v = random_unitary(dim, rng) if basis is None else basis
    m = (v * random_signs(dim, rng, degenerate)) @ v.conj().T
    return DichotomicObservable((m + m.conj().T) / 2, label)


@dataclass(frozen=True, eq=False)
class State:
    kind: Literal["pure", "density"]
    data: np.ndarray

    def __post_init__(self):
        if self.kind == "pure":
            v = np.asarray(self.data, dtype=complex)
            if v.ndim != 1 or v.size == 0:
                raise DimensionError(f"pure state must be a non-empty vector, got shape {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValidationError("state vector has non-finite amplitudes")
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > PURE_NORM_TOL:
                raise ValidationError(f"state vector norm is {norm!r}, expected 1 within {PURE_NORM_TOL}")
        elif self.kind == "density":
            v = la.require_hermitian(self.data, what="density matrix").copy()
            tr = np.trace(v).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValidationError(f"density matrix trace is {tr!r}, expected 1 within {TRACE_TOL}")
            lowest = la.eigvalsh(v)[0]
            if lowest < -DENSITY_EIG_TOL:
                raise ValidationError(f"density matrix has negative eigenvalue {lowest:.3e}")
        else:
            raise ValueError(f"state kind must be 'pure' or 'density', got {self.kind!r}")
        v = np.array(v, dtype=complex)
        v.setflags(write=False)
        object.__setattr__(self, "data", v)

    @classmethod
    def pure(cls, amplitudes) -> State:
        return cls("pure", np.asarray(amplitudes, dtype=complex))

    @classmethod
    def density(cls, rho) -> State:
        return cls("density", np.asarray(rho, dtype=complex))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def density_matrix(self) -> np.ndarray:
        if self.kind == "density":
            return self.data
        return np.outer(self.data, self.data.conj())


def singlet() -> State:
    """(|01> - |10>)/sqrt(2)."""
    return State.pure(np.array([0, 1, -1, 0]) / np.sqrt(2))


def basis_state(dim: int, index: int) -> State:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return State.pure(v)


def random_pure_state(dim: int, rng: np.random.Generator) -> State:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return State.pure(v / np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class JointMeasurement:
    """One measurement context as a 4-outcome PVM on the joint space.

    ``projectors`` maps each outcome pair ``(a, b)`` to its projector.  For
    product form it is derived from the local spectral projectors; a custom
    PVM is validated for idempotence, orthogonality and completeness.
    """

    context: tuple[str, str]
    form: Literal["product", "custom"]
    projectors: Mapping[tuple[int, int], np.ndarray]
    alice: DichotomicObservable | None = None
    bob: DichotomicObservable | None = None

    @classmethod
    def product(cls, context, alice: DichotomicObservable, bob: DichotomicObservable) -> JointMeasurement:
        projs = {
            (a, b): la.tensor(alice.projector(a), bob.projector(b)) for a, b in OUTCOMES
        }
        return cls(tuple(context), "product", projs, alice, bob)

    @classmethod
    def custom(cls, context, projectors: Mapping[tuple[int, int], np.ndarray]) -> JointMeasurement:
        missing = set(OUTCOMES) - set(projectors)
        if missing:
            raise ValidationError(f"custom PVM for {context_label(context)} lacks outcomes {sorted(missing)}")
        projs = {o: la.as_matrix(projectors[o], square=True) for o in OUTCOMES}
        pvm_defects(projs, raise_above=PVM_TOL, context=context)
        return cls(tuple(context), "custom", projs)

    @property
    def dim(self) -> int:
        return self.projectors[OUTCOMES[0]].shape[0]

    def marginal_projector(self, party: Literal["alice", "bob"], outcome: int) -> np.ndarray:
        """Coarse-grained projector for one party's outcome within this context."""
        if party == "alice":
            return sum(self.projectors[(outcome, b)] for b in (1, -1))
        return sum(self.projectors[(a, outcome)] for a in (1, -1))


def pvm_defects(
    projectors: Mapping[tuple[int, int], np.ndarray],
    *,
    raise_above: float | None = None,
    context=("?", "?"),
) -> dict[str, float]:
    """Worst Hermiticity, idempotence, orthogonality and completeness defects."""
    mats = [projectors[o] for o in OUTCOMES]
    n = mats[0].shape[0]
    if any(p.shape != (n, n) for p in mats):
        raise DimensionError(f"PVM for {context_label(context)} has projectors of differing shapes")
    out = {
        "hermiticity": max(la.check_hermitian(p).max_asymmetry for p in mats),
        "idempotence": max(la.frobenius(p @ p - p) for p in mats),
        "orthogonality": max(
            (la.frobenius(p @ q) for p, q in itertools.combinations(mats, 2)), default=0.0
        ),
        "completeness": la.frobenius(sum(mats) - la.identity(n)),
    }
    if raise_above is not None:
        for name, value in out.items():
            if value > raise_above:
                raise ValidationError(
                    f"custom PVM for {context_label(context)} fails {name}: defect {value:.3e} > {raise_above:.1e}"
                )
    return out


@dataclass(frozen=True, eq=False)
class BellScenario:
    dim_alice: int
    dim_bob: int
    state: State
    measurements: Mapping[tuple[str, str], JointMeasurement]
    observables: Mapping[str, DichotomicObservable] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim_alice < 1 or self.dim_bob < 1:
            raise DimensionError("party dimensions must be positive")
        n = self.dim_alice * self.dim_bob
        if n > la.MAX_DIM:
            raise DimensionError(f"joint dimension {n} exceeds maximum {la.MAX_DIM}")
        if self.state.dim != n:
            raise DimensionError(f"state has dimension {self.state.dim}, expected {n}")
        if set(self.measurements) != set(CONTEXTS) or len(self.measurements) != 4:
            raise ValidationError("a scenario needs exactly the four contexts (A,B), (A,B'), (A',B), (A',B')")
        for ctx, jm in self.measurements.items():
            if jm.context != ctx:
                raise ValidationError(f"measurement filed under {ctx} claims context {jm.context}")
            if jm.dim != n:
                raise DimensionError(f"measurement {context_label(ctx)} has dimension {jm.dim}, expected {n}")
        for name, obs in self.observables.items():
            want = self.dim_alice if name in ALICE else self.dim_bob if name in BOB else None
            if want is None:
                raise ValidationError(f"unknown observable name {name!r}")
            if obs.dim != want:
                raise DimensionError(f"observable {name} has dimension {obs.dim}, expected {want}")

    @classmethod
    def product(cls, state: State, a, a2, b, b2) -> BellScenario:
        """Scenario whose four contexts are tensor products of local observables."""
        obs = {}
        for name, m in zip(("A", "A'", "B", "B'"), (a, a2, b, b2)):
            obs[name] = m if isinstance(m, DichotomicObservable) else DichotomicObservable(m, name)
        meas = {ctx: JointMeasurement.product(ctx, obs[ctx[0]], obs[ctx[1]]) for ctx in CONTEXTS}
        return cls(obs["A"].dim, obs["B"].dim, state, meas, obs)

    @classmethod
    def custom(cls, dim_alice: int, dim_bob: int, state: State, pvms: Mapping) -> BellScenario:
        meas = {}
        for ctx in CONTEXTS:
            if ctx not in pvms:
                raise ValidationError(f"missing measurement for context {context_label(ctx)}")
            p = pvms[ctx]
            meas[ctx] = p if isinstance(p, JointMeasurement) else JointMeasurement.custom(ctx, p)
        return cls(dim_alice, dim_bob, state, meas)

    @property
    def dim(self) -> int:
        return self.dim_alice * self.dim_bob

    @property
    def is_product(self) -> bool:
        return len(self.observables) == 4 and all(
            m.form == "product" for m in self.measurements.values()
        )

    def locals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if not self.is_product:
            raise MissingObservablesError(
                "operation needs product-form local observables A, A', B, B'; "
                "this scenario uses custom joint measurements"
            )
        o = self.observables
        return o["A"].matrix, o["A'"].matrix, o["B"].matrix, o["B'"].matrix


def build_chsh_operator(s: BellScenario) -> np.ndarray:
    """C = A (x) (B + B') + A' (x) (B - B')."""
    a, a2, b, b2 = s.locals()
    return la.tensor(a, b + b2) + la.tensor(a2, b - b2)


def square_identity_residual(s: BellScenario, sign: int = -1) -> float:
    """``||C^2 - 4I - sign * [A,A'] (x) [B,B']||_F``.

    Expanding ``C^2`` with ``A^2 = A'^2 = B^2 = B'^2 = I`` leaves the cross
    terms ``A A' (x) (B+B')(B-B') + A' A (x) (B-B')(B+B')``, which equal
    ``-[A,A'] (x) [B,B']``; so the identity holds for ``sign = -1`` only.
    The opposite sign is off by ``2 ||[A,A']|| ||[B,B']||``.
    """
    a, a2, b, b2 = s.locals()
    for name, m in zip(("A", "A'", "B", "B'"), (a, a2, b, b2)):
        defect = square_defect(m)
        if defect > DICHOTOMIC_TOL:
            raise NotDichotomicError(name, defect, DICHOTOMIC_TOL)
    c = build_chsh_operator(s)
    rhs = 4 * la.identity(s.dim) + sign * la.tensor(la.commutator(a, a2), la.commutator(b, b2))
    return la.frobenius(c @ c - rhs)


def verify_square_identity(s: BellScenario) -> float:
    """Frobenius residual of C^2 = 4I - [A,A'] (x) [B,B'].

    Raises :class:`NotDichotomicError` naming the first observable whose
    square is not the identity.
    """
    return square_identity_residual(s, -1)


@dataclass(frozen=True, eq=False)
class CommutatorRelation:
    label: str
    direct: np.ndarray
    closed_form: np.ndarray

    @property
    def residual(self) -> float:
        return la.frobenius(self.direct - self.closed_form)

    @property
    def norm(self) -> float:
        return la.frobenius(self.direct)


def commutator_table(s: BellScenario) -> dict[str, CommutatorRelation]:
    """The six commutators among A(x)B, A'(x)B, A(x)B', A'(x)B'.

    Each is computed by brute force and from the closed form that uses only
    squares equal to the identity.
    """
    a, a2, b, b2 = s.locals()
    ia, ib = la.identity(s.dim_alice), la.identity(s.dim_bob)
    t = la.tensor
    ab, a2b, ab2, a2b2 = t(a, b), t(a2, b), t(a, b2), t(a2, b2)
    caa, cbb = la.commutator(a, a2), la.commutator(b, b2)
    rows = [
        ("[A(x)B, A'(x)B]", ab, a2b, t(caa, ib)),
        ("[A(x)B, A(x)B']", ab, ab2, t(ia, cbb)),
        ("[A'(x)B, A'(x)B']", a2b, a2b2, t(ia, cbb)),
        ("[A(x)B', A'(x)B']", ab2, a2b2, t(caa, ib)),
        ("[A(x)B, A'(x)B']", ab, a2b2, t(caa, b @ b2) + t(a2 @ a, cbb)),
        ("[A'(x)B, A(x)B']", a2b, ab2, t(-caa, b @ b2) + t(a @ a2, cbb)),
    ]
    return {
        label: CommutatorRelation(label, la.commutator(x, y), rhs) for label, x, y, rhs in rows
    }


def chsh_expectation(s: BellScenario) -> float:
    return la.expectation(s.state, build_chsh_operator(s))


def chsh_spectral_bound(s: BellScenario) -> float:
    """Largest |<psi|C|psi>| over all states, i.e. the spectral radius of C."""
    vals = la.eigvalsh(build_chsh_operator(s))
    return float(max(abs(vals[0]), abs(vals[-1])))


def local_commutator_norms(s: BellScenario) -> dict[str, float]:
    a, a2, b, b2 = s.locals()
    return {
        "[A,A']": la.frobenius(la.commutator(a, a2)),
        "[B,B']": la.frobenius(la.commutator(b, b2)),
    }


def local_pieces(s: BellScenario) -> dict[tuple[str, str], np.ndarray]:
    """Joint-space observable ``P(+) - P(-)`` of each party inside each context.

    Keys are ``(context label, observable name)``.  For product contexts
    these are ``A (x) I`` and friends; for custom PVMs they are the
    coarse-grainings of the four projectors.
    """
    out = {}
    for ctx in CONTEXTS:
        jm = s.measurements[ctx]
        for party, name in (("alice", ctx[0]), ("bob", ctx[1])):
            out[(context_label(ctx), name)] = jm.marginal_projector(party, 1) - jm.marginal_projector(party, -1)
    return out


def local_compatibility_defect(s: BellScenario) -> float:
    """Largest commutator norm between any two of the eight local pieces."""
    pieces = list(local_pieces(s).values())
    return max(la.frobenius(la.commutator(p, q)) for p, q in itertools.combinations(pieces, 2))


def random_density_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> State:
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return State.density(rho / np.trace(rho).real)


def random_product_scenario(
    rng: np.random.Generator,
    dim_alice: int,
    dim_bob: int,
    *,
    commuting: bool = False,
    mixed: bool = False,
) -> BellScenario:
    """Random dichotomic quadruple and random state.

    With ``commuting`` each party's two observables share a random
    eigenbasis, so ``[A,A'] = [B,B'] = 0`` up to rounding.
    """
    if commuting:
        va, vb = random_unitary(dim_alice, rng), random_unitary(dim_bob, rng)
        quad = [
            random_dichotomic(dim_alice, rng, basis=va, degenerate=True),
            random_dichotomic(dim_alice, rng, basis=va, degenerate=True),
            random_dichotomic(dim_bob, rng, basis=vb, degenerate=True),
            random_dichotomic(dim_bob, rng, basis=vb, degenerate=True),
        ]
    else:
        quad = [random_dichotomic(d, rng) for d in (dim_alice, dim_alice, dim_bob, dim_bob)]
    n = dim_alice * dim_bob
    state = random_density_state(n, rng) if mixed else random_pure_state(n, rng)
    return BellScenario.product(state, *quad)
