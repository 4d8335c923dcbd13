"""Backprop-free few-shot learning via routed signal interference.

Dipole signals travel from grid sources to class targets along
duration-distributed routes; a local reinforcement rule concentrates route
probability so that similar signals interfere constructively at the right
target, and classification is argmax of the resulting interference energy.
"""

__version__ = "0.1.0"

from .geometry import (ConfigurationError, Geometry, GridCoord,
                       SpacetimeConfig, TargetSite, feasible_durations,
                       manhattan_distance, mnist_geometry, target_sites)
from .policy import (LearningRates, RoutePolicy, UpdateAccumulator,
                     accumulate, apply_and_renormalize, init_uniform,
                     load_policy, save_policy, similarity_bucket)
from .signals import (RawImage, Signal, TargetField, binarize_truncate,
                      encode_patch, image_signals, make_target, parse_idx)
from .engine import (ArrivalEvent, EnergyTrace, attended_target,
                     collect_arrivals, goal_J, instantaneous_energy, predict)
from .training import FewShotSpec, evaluate_accuracy, train_example, train_run
from .metrics import (arrival_distribution, arrival_time_table,
                      expected_arrival_time, expected_similarity,
                      signal_entropy, similarity_table)
from .meanfield import MFParams, activation_curve, solve_mu, transition_check
from .double_slit import DoubleSlitConfig, emit_wave, run_double_slit
