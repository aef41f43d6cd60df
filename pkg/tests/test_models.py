import numpy as np
import pytest

from bellchsh.behavior import behavior_from_scenario, check_marginal_laws, chsh_from_behavior, correlators, grand_measurement
from bellchsh.errors import MissingObservablesError
from bellchsh.kolmogorov import embed, embeddability_equivalence_check, verify_model
from bellchsh.linalg import SIGMA_X, SIGMA_Z, eigvalsh
from bellchsh.models import PRESETS, beyond_tsirelson_pvms, get_preset, preset_beyond_tsirelson
from bellchsh.scenario import (
    CONTEXTS,
    OUTCOMES,
    chsh_expectation,
    local_compatibility_defect,
    build_chsh_operator,
    pvm_defects,
    verify_square_identity,
)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_end_to_end(name):
    p = get_preset(name)
    b = behavior_from_scenario(p.scenario)
    assert chsh_from_behavior(b) == pytest.approx(p.expected_chsh, abs=1e-9)
    status = "satisfied" if check_marginal_laws(b).satisfied else "violated"
    assert status == p.expected_marginal_laws
    assert embeddability_equivalence_check(b)
    assert p.description


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        get_preset("pr-box")


class TestClassical:
    def test_values(self):
        p = get_preset("classical")
        b = behavior_from_scenario(p.scenario)
        assert list(correlators(b)) == [1, 1, 1, 1]
        r = embed(b)
        assert r.feasible and verify_model(r.model, b) <= 1e-12

    def test_grand_measurement(self):
        g = grand_measurement(get_preset("classical").scenario)
        assert g.prob(1, 1, 1, 1) == pytest.approx(1)


class TestSinglet:
    def test_value_from_eigensolver(self):
        s = get_preset("singlet-tsirelson").scenario
        # the optimal state is the top eigenvector of C; its eigenvalue is the oracle
        top = eigvalsh(build_chsh_operator(s))[-1]
        assert chsh_expectation(s) == pytest.approx(top, abs=1e-9)
        assert top == pytest.approx(2 * np.sqrt(2), abs=1e-9)

    def test_observables(self):
        a, a2, b, b2 = get_preset("singlet-tsirelson").scenario.locals()
        r = 1 / np.sqrt(2)
        assert np.allclose(a, SIGMA_Z) and np.allclose(a2, SIGMA_X)
        assert np.allclose(b, -(SIGMA_Z + SIGMA_X) * r)
        assert np.allclose(b2, (SIGMA_X - SIGMA_Z) * r)

    def test_marginals_and_embedding(self):
        b = behavior_from_scenario(get_preset("singlet-tsirelson").scenario)
        assert check_marginal_laws(b, 1e-9).satisfied
        assert embed(b).fine_witness.value >= 2 * np.sqrt(2) - 1e-8


class TestBeyondTsirelson:
    def test_pvms(self):
        for ctx, pvm in beyond_tsirelson_pvms().items():
            assert max(pvm_defects(pvm).values()) <= 1e-12

    def test_state_targets(self):
        s = preset_beyond_tsirelson().scenario
        b = behavior_from_scenario(s)
        for ctx in CONTEXTS:
            target = (1, -1) if ctx == ("A'", "B'") else (1, 1)
            assert b.prob(ctx, *target) == 1

    def test_complement_in_canonical_order(self):
        pvm = beyond_tsirelson_pvms()[("A'", "B'")]
        rest = [o for o in OUTCOMES if o != (1, -1)]
        for k, o in enumerate(rest, start=1):
            assert pvm[o][k, k] == 1

    def test_chsh_and_marginals(self):
        b = behavior_from_scenario(preset_beyond_tsirelson().scenario)
        assert chsh_from_behavior(b) == 4
        rep = check_marginal_laws(b)
        assert not rep.satisfied and rep.bob["B'"] == 2

    def test_local_pieces_compatible(self):
        assert local_compatibility_defect(preset_beyond_tsirelson().scenario) <= 1e-12

    def test_no_product_observables(self):
        s = preset_beyond_tsirelson().scenario
        assert not s.is_product
        with pytest.raises(MissingObservablesError):
            verify_square_identity(s)
