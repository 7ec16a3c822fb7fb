"""Density, intersection and tail measurements on sampled worm graphs."""

from moser_modulus.densitylab.experiments import (
    TailReport,
    ad_density_experiment,
    continuity_experiment,
    density_tail_experiment,
    intersection_tail_experiment,
    proof_delta,
    trial_seed,
)
from moser_modulus.densitylab.hoeffding import (
    hoeffding_bound,
    hoeffding_table,
    hoeffding_validation,
)
from moser_modulus.densitylab.layers import CellLayer, Measure, measure_under, net_search
from moser_modulus.densitylab.measures import (
    DyadicPartition,
    ShiftReport,
    StringStats,
    TrivialBound,
    density,
    dyadic_partition,
    intersection_length,
    shift_transfer_check,
    string_density_draws,
    string_pile_table,
    string_stats,
    sup_density_net,
    sup_intersection_net,
    trivial_density_bound,
)
from moser_modulus.densitylab.params import (
    DensityParams,
    KEpsRow,
    RSchedule,
    k_eps_condition,
    make_params,
    r_schedule,
)

__all__ = [
    "CellLayer",
    "DensityParams",
    "DyadicPartition",
    "KEpsRow",
    "Measure",
    "RSchedule",
    "ShiftReport",
    "StringStats",
    "TailReport",
    "TrivialBound",
    "ad_density_experiment",
    "continuity_experiment",
    "density",
    "density_tail_experiment",
    "dyadic_partition",
    "hoeffding_bound",
    "hoeffding_table",
    "hoeffding_validation",
    "intersection_length",
    "intersection_tail_experiment",
    "k_eps_condition",
    "make_params",
    "measure_under",
    "net_search",
    "proof_delta",
    "r_schedule",
    "shift_transfer_check",
    "string_density_draws",
    "string_pile_table",
    "string_stats",
    "sup_density_net",
    "sup_intersection_net",
    "trial_seed",
    "trivial_density_bound",
]
