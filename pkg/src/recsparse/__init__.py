"""Recursive reconstruction of sparse signal sequences from few noisy
measurements: weighted-l1 solver, Modified-CS and Add-LS-Del trackers,
signal-change generators, restricted isometry oracles, theorem checkers
and a Monte-Carlo harness."""
from .analysis import (ConditionReport, RipAccess, TheoremParams, c1_constant, check_theorem,
                       estimate_zeta, ls_error_bound, ric_bruteforce, roc_bruteforce, verify_conclusions)
from .harness import ExperimentConfig, MetricsSeries, export, nmse, run_experiment, support_errors
from .sensing import gen_bounded_uniform_noise, gen_gaussian_unit_columns, measure
from .signal_model import Model1Params, Model2Params, generate_sequence, verify_assumptions
from .trackers import TrackerState, addlsdel_step, modcs_step
from .wl1 import WeightedL1Problem, bp_enumeration_oracle, kkt_certificate, solve_modcs, solve_noisy_l1

__version__ = "0.1.0"
