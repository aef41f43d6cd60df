"""Line-oriented scenario files.

Grammar (``#`` starts a comment, blank lines are ignored)::

    file         := section+
    section      := "[dimensions]" dims | "[state]" state | "[observables]" obs*
                  | "[measurements]" meas* | "[behavior]" table-block*
    dims         := "alice" INT  "bob" INT          (one per line)
    state        := "singlet"
                  | "basis" INT                     computational basis vector
                  | "pure" complex+                 amplitudes, any line layout
                  | "density" row{N}                N = alice * bob
    obs          := NAME "=" ("pauli" AXIS | "pauli angle" REAL | "matrix" row{d})
    meas         := X Y "product" | X Y "custom" ("projector" SIGN SIGN row{N}){4}
    row          := complex{n}                      one matrix row per line
    complex      := REAL | REAL "," REAL            real part, imaginary part
    NAME, X, Y   := "A" | "A'" | "B" | "B'"
    AXIS         := "x" | "y" | "z" | "i"
    SIGN         := "+" | "-"

``pauli angle t`` means ``cos(t) sigma_z + sin(t) sigma_x``.  Contexts not
listed under ``[measurements]`` default to product form.  A file with only
a ``[behavior]`` section describes tables directly (see
:func:`bellchsh.behavior.format_behavior`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .behavior import Behavior, format_behavior, parse_behavior
from .errors import BellError, ValidationError
from .scenario import (
    ALICE,
    BOB,
    CONTEXTS,
    OUTCOMES,
    BellScenario,
    DichotomicObservable,
    JointMeasurement,
    State,
    pauli_angle,
    singlet,
)

SECTIONS = ("dimensions", "state", "observables", "measurements", "behavior")
_SIGN = {"+": 1, "-": -1}


class ScenarioParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ParsedInput:
    scenario: BellScenario | None = None
    behavior: Behavior | None = None


class _Cursor:
    def __init__(self, lines: list[tuple[int, str]]):
        self.lines = lines
        self.pos = 0

    def __bool__(self):
        return self.pos < len(self.lines)

    def peek(self) -> tuple[int, str]:
        return self.lines[self.pos]

    def take(self, what: str, after: int) -> tuple[int, str]:
        if not self:
            raise ScenarioParseError(f"unexpected end of section, expected {what}", after)
        item = self.lines[self.pos]
        self.pos += 1
        return item


def parse_complex(token: str, lineno: int) -> complex:
    parts = token.split(",")
    try:
        if len(parts) == 1:
            value = complex(float(parts[0]), 0.0)
        elif len(parts) == 2:
            value = complex(float(parts[0]), float(parts[1]))
        else:
            raise ValueError
    except ValueError:
        raise ScenarioParseError(f"malformed complex number {token!r} (expected 're,im')", lineno) from None
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise ScenarioParseError(f"non-finite number {token!r}", lineno)
    return value


def _read_rows(cur: _Cursor, n: int, after: int, what: str) -> np.ndarray:
    rows = []
    for r in range(n):
        lineno, text = cur.take(f"row {r + 1} of {n} for {what}", after)
        toks = text.split()
        if len(toks) != n:
            raise ScenarioParseError(f"{what}: expected {n} entries in row {r + 1}, found {len(toks)}", lineno)
        rows.append([parse_complex(t, lineno) for t in toks])
        after = lineno
    return np.array(rows, dtype=complex)


def _split_sections(text: str) -> dict[str, tuple[int, list[tuple[int, str]]]]:
    sections: dict[str, tuple[int, list]] = {}
    current = None
    raw_lines = text.splitlines()
    for i, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ScenarioParseError(f"unknown section [{name}]", i)
            if name in sections:
                raise ScenarioParseError(f"duplicate section [{name}]", i)
            sections[name] = (i, [])
            current = name
            continue
        if current is None:
            raise ScenarioParseError("content before the first section header", i)
        sections[current][1].append((i, line))
    return sections


def _parse_dims(start: int, lines) -> tuple[int, int]:
    dims = {}
    for lineno, text in lines:
        toks = text.split()
        if len(toks) != 2 or toks[0] not in ("alice", "bob"):
            raise ScenarioParseError("expected 'alice <int>' or 'bob <int>'", lineno)
        try:
            v = int(toks[1])
        except ValueError:
            raise ScenarioParseError(f"dimension must be an integer, got {toks[1]!r}", lineno) from None
        if v < 1:
            raise ScenarioParseError("dimension must be positive", lineno)
        dims[toks[0]] = v
    for party in ("alice", "bob"):
        if party not in dims:
            raise ScenarioParseError(f"[dimensions] lacks '{party}'", start)
    return dims["alice"], dims["bob"]


def _parse_state(start: int, lines, n: int) -> State:
    cur = _Cursor(lines)
    lineno, text = cur.take("a state declaration", start)
    toks = text.split()
    kind = toks[0]
    try:
        if kind == "singlet":
            if n != 4:
                raise ScenarioParseError("the singlet needs alice = bob = 2", lineno)
            state = singlet()
        elif kind == "basis":
            if len(toks) != 2 or not toks[1].isdigit() or int(toks[1]) >= n:
                raise ScenarioParseError(f"expected 'basis <index below {n}>'", lineno)
            v = np.zeros(n, dtype=complex)
            v[int(toks[1])] = 1
            state = State.pure(v)
        elif kind == "pure":
            amps = [parse_complex(t, lineno) for t in toks[1:]]
            last = lineno
            while cur:
                last, more = cur.take("amplitudes", last)
                amps.extend(parse_complex(t, last) for t in more.split())
            if len(amps) != n:
                raise ScenarioParseError(f"pure state needs {n} amplitudes, found {len(amps)}", last)
            state = State.pure(amps)
        elif kind == "density":
            if len(toks) != 1:
                raise ScenarioParseError("'density' takes no arguments; rows follow on their own lines", lineno)
            state = State.density(_read_rows(cur, n, lineno, "density matrix"))
        else:
            raise ScenarioParseError(f"unknown state kind {kind!r}", lineno)
    except ScenarioParseError:
        raise
    except BellError as exc:
        raise ScenarioParseError(str(exc), lineno) from None
    if cur:
        raise ScenarioParseError("unexpected content after the state", cur.peek()[0])
    return state


def _parse_observables(lines, dims: dict[str, int]) -> dict[str, DichotomicObservable]:
    cur = _Cursor(lines)
    out = {}
    while cur:
        lineno, text = cur.take("an observable", 0)
        name, sep, rhs = text.partition("=")
        name = name.strip()
        if not sep or name not in dims:
            raise ScenarioParseError("expected '<A|A'|B|B'> = <definition>'", lineno)
        if name in out:
            raise ScenarioParseError(f"observable {name} defined twice", lineno)
        d = dims[name]
        toks = rhs.split()
        if not toks:
            raise ScenarioParseError(f"empty definition for {name}", lineno)
        if toks[0] == "pauli":
            if d != 2:
                raise ScenarioParseError("pauli shorthand needs a 2-dimensional party", lineno)
            if len(toks) == 2 and toks[1].lower() in la.PAULI:
                m = la.PAULI[toks[1].lower()]
            elif len(toks) == 3 and toks[1] == "angle":
                try:
                    m = pauli_angle(float(toks[2]))
                except ValueError:
                    raise ScenarioParseError(f"bad angle {toks[2]!r}", lineno) from None
            else:
                raise ScenarioParseError("expected 'pauli <x|y|z|i>' or 'pauli angle <radians>'", lineno)
        elif toks[0] == "matrix" and len(toks) == 1:
            m = _read_rows(cur, d, lineno, f"observable {name}")
        else:
            raise ScenarioParseError(f"unknown observable definition {rhs.strip()!r}", lineno)
        try:
            out[name] = DichotomicObservable(m, name)
        except BellError as exc:
            raise ScenarioParseError(str(exc), lineno) from None
    return out


def _parse_measurements(lines, n: int) -> dict:
    cur = _Cursor(lines)
    out: dict = {}
    while cur:
        lineno, text = cur.take("a measurement", 0)
        toks = text.split()
        if len(toks) != 3 or (toks[0], toks[1]) not in CONTEXTS or toks[2] not in ("product", "custom"):
            raise ScenarioParseError("expected '<A|A'> <B|B'> <product|custom>'", lineno)
        ctx = (toks[0], toks[1])
        if ctx in out:
            raise ScenarioParseError(f"context {toks[0]} {toks[1]} declared twice", lineno)
        if toks[2] == "product":
            out[ctx] = ("product", lineno)
            continue
        projs = {}
        last = lineno
        for _ in range(4):
            plineno, ptext = cur.take("'projector <+|-> <+|->'", last)
            ptoks = ptext.split()
            if len(ptoks) != 3 or ptoks[0] != "projector" or ptoks[1] not in _SIGN or ptoks[2] not in _SIGN:
                raise ScenarioParseError("expected 'projector <+|-> <+|->'", plineno)
            key = (_SIGN[ptoks[1]], _SIGN[ptoks[2]])
            if key in projs:
                raise ScenarioParseError(f"projector {ptoks[1]} {ptoks[2]} given twice", plineno)
            projs[key] = _read_rows(cur, n, plineno, f"projector {ptoks[1]} {ptoks[2]}")
            last = plineno + n
        try:
            out[ctx] = (JointMeasurement.custom(ctx, projs), lineno)
        except BellError as exc:
            raise ScenarioParseError(str(exc), lineno) from None
    return out


def parse_scenario_text(text: str) -> ParsedInput:
    sections = _split_sections(text)
    if not sections:
        raise ScenarioParseError("empty scenario file")
    if "behavior" in sections:
        others = [s for s in sections if s != "behavior"]
        if others:
            raise ScenarioParseError(f"a [behavior] file cannot also contain [{others[0]}]", sections[others[0]][0])
        start, lines = sections["behavior"]
        body = ["" for _ in range(start)]
        for lineno, line in lines:
            while len(body) < lineno - 1:
                body.append("")
            body.append(line)
        try:
            return ParsedInput(behavior=parse_behavior("\n".join(body)))
        except BellError as exc:
            raise ScenarioParseError(str(exc), getattr(exc, "line", None)) from None

    if "dimensions" not in sections:
        raise ScenarioParseError("missing [dimensions] section")
    da, db = _parse_dims(*sections["dimensions"])
    if "state" not in sections:
        raise ScenarioParseError("missing [state] section")
    n = da * db
    if n > la.MAX_DIM:
        raise ScenarioParseError(f"joint dimension {n} exceeds {la.MAX_DIM}", sections["dimensions"][0])
    state = _parse_state(*sections["state"], n)
    dims = {name: da for name in ALICE} | {name: db for name in BOB}
    obs = _parse_observables(sections.get("observables", (0, []))[1], dims)
    meas_decl = _parse_measurements(sections.get("measurements", (0, []))[1], n)

    measurements = {}
    for ctx in CONTEXTS:
        decl, lineno = meas_decl.get(ctx, ("product", sections.get("measurements", sections["state"])[0]))
        if decl == "product":
            missing = [k for k in ctx if k not in obs]
            if missing:
                raise ScenarioParseError(
                    f"context {ctx[0]} {ctx[1]} is product form but observable(s) {', '.join(missing)} are undefined",
                    lineno,
                )
            measurements[ctx] = JointMeasurement.product(ctx, obs[ctx[0]], obs[ctx[1]])
        else:
            measurements[ctx] = decl
    try:
        scenario = BellScenario(da, db, state, measurements, obs)
    except BellError as exc:
        raise ScenarioParseError(str(exc)) from None
    return ParsedInput(scenario=scenario)


def load(path) -> ParsedInput:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_text(fh.read())


# writer -------------------------------------------------------------------

def _fmt_complex(z: complex) -> str:
    return f"{float(z.real)!r},{float(z.imag)!r}"


def _fmt_rows(m: np.ndarray, indent: str = "  ") -> list[str]:
    return [indent + " ".join(_fmt_complex(v) for v in row) for row in m]


def _sign(v: int) -> str:
    return "+" if v == 1 else "-"


def format_scenario(s: BellScenario, title: str = "") -> str:
    """Serialize with full double precision so parsing reproduces ``s`` exactly."""
    out = []
    if title:
        out.extend(f"# {line}" for line in title.splitlines())
        out.append("")
    out += ["[dimensions]", f"alice {s.dim_alice}", f"bob {s.dim_bob}", "", "[state]"]
    if s.state.kind == "pure":
        out.append("pure")
        out.extend("  " + _fmt_complex(v) for v in s.state.data)
    else:
        out.append("density")
        out.extend(_fmt_rows(s.state.data))
    out.append("")
    if s.observables:
        out.append("[observables]")
        for name in ("A", "A'", "B", "B'"):
            if name in s.observables:
                out.append(f"{name} = matrix")
                out.extend(_fmt_rows(s.observables[name].matrix))
        out.append("")
    out.append("[measurements]")
    for ctx in CONTEXTS:
        jm = s.measurements[ctx]
        out.append(f"{ctx[0]} {ctx[1]} {jm.form}")
        if jm.form == "custom":
            for a, b in OUTCOMES:
                out.append(f"projector {_sign(a)} {_sign(b)}")
                out.extend(_fmt_rows(jm.projectors[(a, b)]))
    out.append("")
    return "\n".join(out)


def format_behavior_file(b: Behavior, title: str = "") -> str:
    head = "".join(f"# {line}\n" for line in title.splitlines())
    return head + "[behavior]\n" + format_behavior(b)
