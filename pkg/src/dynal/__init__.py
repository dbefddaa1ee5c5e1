"""Desk-scale active-learning workbench with dynamics-aware uncertainty.

Trains a small feedforward classifier jointly with a head that predicts
each sample's mean probability trajectory, scores unlabeled pools with
snapshot or dynamics-aware entropy/margin estimators, and numerically
checks the local-elasticity theory behind the approach.
"""

from .acquisition import kcenter_greedy, random_select, sample_subset, select_top_k
from .alengine import (
    ALConfig,
    CycleReport,
    evaluate,
    kl_analysis,
    run_cycle,
    run_experiment,
    run_pilot,
    separation_auroc,
    train_joint,
)
from .datasets import (
    Dataset,
    DatasetSpec,
    ImbalanceSpec,
    apply_imbalance,
    build_dataset,
    gen_concentric_rings,
    gen_gaussian_mixture,
    load_csv,
    save_csv,
    split,
)
from .estimators import (
    AcquisitionScore,
    StrategyKind,
    entropy,
    margin_naive,
    margin_with_label,
    prob_at_predicted,
    prob_max,
    strategy_scores,
    tidal_margin,
)
from .netcore import (
    ForwardTrace,
    NetConfig,
    NetState,
    OptimizerConfig,
    cross_entropy,
    forward,
    forward_batch,
    grad_joint,
    init_net,
    lr_at,
    optimizer_step,
)
from .tdhead import HeadConfig, HeadState, head_forward, init_head, kl_divergence, module_loss
from .tdtrack import TDRecord, TDStore, td_init, td_update, td_value
from .theorysim import (
    ElasticityParams,
    convergence_gap,
    integrate_ode,
    s_vector,
    simulate_discrete,
    simulate_discrete_ensemble,
    theorem2_entropy,
    theorem2_margin,
)

__version__ = "0.1.0"
