"""Preset scenarios for the three CHSH regimes: classical, Tsirelson, and beyond."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from . import linalg as la
from .scenario import CONTEXTS, OUTCOMES, BellScenario, basis_state, singlet


@dataclass(frozen=True, eq=False)
class Preset:
    name: str
    scenario: BellScenario
    expected_chsh: float
    expected_marginal_laws: Literal["satisfied", "violated"]
    description: str = ""


def preset_classical() -> Preset:
    z = la.SIGMA_Z
    s = BellScenario.product(basis_state(4, 0), z, z, z, z)
    return Preset(
        "classical",
        s,
        2.0,
        "satisfied",
        "Compatible locals A = A' = B = B' = sigma_z on |00>; E = (1, 1, 1, 1).",
    )


def preset_singlet_tsirelson() -> Preset:
    r = 1 / np.sqrt(2)
    z, x = la.SIGMA_Z, la.SIGMA_X
    s = BellScenario.product(singlet(), z, x, -(z + x) * r, (-z + x) * r)
    return Preset(
        "singlet-tsirelson",
        s,
        2 * np.sqrt(2),
        "satisfied",
        "Singlet with A = sigma_z, A' = sigma_x, B = -(sigma_z + sigma_x)/sqrt2, "
        "B' = (sigma_x - sigma_z)/sqrt2; reaches 2 sqrt 2.",
    )


# Outcome that receives the state vector in each context.
_BEYOND_TARGET = {
    ("A", "B"): (1, 1),
    ("A", "B'"): (1, 1),
    ("A'", "B"): (1, 1),
    ("A'", "B'"): (1, -1),
}


def beyond_tsirelson_pvms() -> dict:
    """Rank-one PVMs on C^2 (x) C^2 built from the computational basis.

    The state |00> goes to the target outcome of each context; the other
    three basis vectors fill the remaining outcomes in canonical order.
    """
    basis = np.eye(4, dtype=complex)
    pvms = {}
    for ctx in CONTEXTS:
        target = _BEYOND_TARGET[ctx]
        rest = iter(o for o in OUTCOMES if o != target)
        assignment = {target: 0}
        for k in (1, 2, 3):
            assignment[next(rest)] = k
        pvms[ctx] = {o: np.outer(basis[k], basis[k].conj()) for o, k in assignment.items()}
    return pvms


def preset_beyond_tsirelson() -> Preset:
    s = BellScenario.custom(2, 2, basis_state(4, 0), beyond_tsirelson_pvms())
    return Preset(
        "beyond-tsirelson",
        s,
        4.0,
        "violated",
        "Representative construction: product state |00> measured with non-product "
        "joint PVMs; E = (1, 1, 1, -1), S = 4, Bob's B' marginal flips with Alice's setting. "
        "Not a reproduction of any specific published machine model.",
    )


PRESETS: dict[str, Callable[[], Preset]] = {
    "classical": preset_classical,
    "singlet-tsirelson": preset_singlet_tsirelson,
    "beyond-tsirelson": preset_beyond_tsirelson,
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
