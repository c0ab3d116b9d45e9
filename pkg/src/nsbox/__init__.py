"""nsbox: no-signaling boxes, Bell functionals and their simulation."""
from .correlation import (
    Correlation,
    Scenario,
    TripartiteCorrelation,
    from_correlators,
    from_samples,
    is_no_signaling,
    load_box,
    marginal,
    mix,
    pr_box,
    rationalize,
    save_box,
    uniform_box,
    validate,
)
from .crypto import (
    bb84_vs_chsh_comparison,
    eve_individual_attack,
    info_disturbance_check,
    isotropic,
    key_advantage_curve,
    mutual_info_ab,
    qber,
    sift,
)
from .games import coin_game, estimate, exam1_guess_game, simulate
from .kernels import BACKEND
from .monogamy import cloning_feasible, monogamy_max
from .polytope import (
    chsh,
    decompose_ns,
    enumerate_deterministic,
    evaluate,
    is_local,
    local_bound,
    ns_vertex_list,
    verify_vertex,
)
from .quantum import (
    Direction,
    SchmidtState,
    SettingFamily,
    chsh_mark_for_settings,
    max_chsh,
    named_family,
    schmidt_correlation,
    singlet_correlation,
)

__version__ = "0.1.0"
