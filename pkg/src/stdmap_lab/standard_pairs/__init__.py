"""Standard-pair machinery: curves, cuts, iterated decomposition, quadrature."""

from .curves import (
    A0_DEFAULT,
    C0,
    Child,
    MeasurePair,
    PairDensity,
    Regularity,
    Root,
    UCurve,
    d2f_gamma,
    df_gamma,
    f_gamma,
    f_gamma_parts,
    height_via_parent,
    invert_f_gamma,
    invert_f_gamma_batch,
    make_child_pair,
    make_children_batch,
    root_pair,
    transport_density,
    transported_bound,
    validate_pair,
)
from .cutting import (
    SpecBatch,
    DecompositionStep,
    components_minus_strips,
    cut_by_class,
    cut_full,
    cut_standard,
    cut_substandard,
)
from .decomposition import (
    DEFAULT_CURVE_CAP,
    DecompositionLedger,
    LedgerRow,
    iterate_decomposition,
)
from .quadrature import (
    adaptive_integral,
    integrate_observable,
    pair_pushforward_integral,
    pair_pushforward_mc,
    pushforward_node_count,
)

__all__ = [
    "A0_DEFAULT", "C0", "Child", "MeasurePair", "PairDensity", "Regularity",
    "Root", "UCurve", "d2f_gamma", "df_gamma", "f_gamma", "f_gamma_parts",
    "height_via_parent", "invert_f_gamma", "invert_f_gamma_batch",
    "make_child_pair", "root_pair", "transport_density", "transported_bound",
    "validate_pair", "SpecBatch", "make_children_batch", "DecompositionStep", "components_minus_strips",
    "cut_by_class", "cut_full", "cut_standard", "cut_substandard",
    "DEFAULT_CURVE_CAP", "DecompositionLedger", "LedgerRow",
    "iterate_decomposition", "adaptive_integral", "integrate_observable",
    "pair_pushforward_integral", "pair_pushforward_mc", "pushforward_node_count",
]
