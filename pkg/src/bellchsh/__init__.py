"""Bell-CHSH scenarios: operator identities, behaviors, marginal laws and
Kolmogorovian embeddability."""
from .behavior import (
    Behavior,
    GrandDistribution,
    MarginalReport,
    behavior_from_scenario,
    check_marginal_laws,
    chsh_from_behavior,
    correlators,
    grand_measurement,
    marginalize,
)
from .kolmogorov import (
    EmbeddabilityResult,
    KolmogorovModel,
    embed,
    embeddability_equivalence_check,
    fine_inequalities,
    verify_model,
)
from .models import preset_beyond_tsirelson, preset_classical, preset_singlet_tsirelson
from .scenario import (
    BellScenario,
    DichotomicObservable,
    JointMeasurement,
    State,
    build_chsh_operator,
    chsh_expectation,
    chsh_spectral_bound,
    commutator_table,
    verify_square_identity,
)

__version__ = "0.1.0"
