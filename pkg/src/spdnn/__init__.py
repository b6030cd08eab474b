"""Sparse-penalized neural network estimation for weakly dependent time series."""

from .bounds import (BoundInputs, DependenceParams, ScheduleParams, concentration_bound,
                     generalization_epsilon, holder_rate, log_covering_bound,
                     rho_n_weak_dependence, schedule)
from .data import SupervisedSet
from .dgp import (DgpSpec, StabilityReport, Trajectory, check_stability, default_lipschitz,
                  make_supervised, simulate_arx_arch, simulate_covariate, std_uniform,
                  target_f)
from .harness import (ExperimentSpec, MetricsReport, TuningGrid, dar_predict, excess_risk,
                      pm10_pipeline, prediction_metrics, run_replications, tune_grid)
from .loss import LossKind, RiskEstimate, empirical_risk, lipschitz_constants, loss_eval, register_loss
from .network import (Architecture, ConstraintReport, Network, check_constraints,
                      flatten_params, forward, forward_batch, load_network, load_params,
                      new_network, save_network)
from .penalty import (PenaltyConfig, clipped_norm, clipped_norm_subgrad, l0_norm, l1_norm,
                      linf_norm, penalty_value)
from .rng import derive_seed, make_rng
from .train import (AdamState, TrainConfig, TrainedModel, adam_step, backprop, train_npdnn,
                    train_spdnn, write_training_log)

__version__ = "0.1.0"
