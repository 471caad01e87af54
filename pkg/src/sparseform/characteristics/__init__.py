from .bumps import ENTROPY, JOINT, L, SEP, bump_constant, bump_cubes, bump_factor_cubes, dual_factor_cubes
from .weights import (
    EXP,
    FW,
    LEFT,
    RIGHT,
    ainf_cubes,
    ainf_exp_cubes,
    ainf_exp_global,
    ainf_exp_local,
    ar_cubes,
    ar_dual_cubes,
    ar_local,
    entropy_constant,
    entropy_cubes,
    fujii_wilson_cubes,
    fujii_wilson_global,
    fujii_wilson_local,
    joint_ar,
    joint_ar_cubes,
    one_supremum_rhs,
    two_weight_ainf_rhs,
)
from .young import (
    EntropyGauge,
    YoungFn,
    bp_integral,
    constant_gauge,
    dual_young,
    gauge_from_spec,
    legendre,
    log_gauge,
    log_power,
    luxembourg,
    numeric_dual,
    power,
    power_gauge,
)
from .young import from_spec as young_from_spec
