"""Multi-objective asynchronous successive halving (MO-ASHA)."""

from moasha.core import Configuration, EvaluationLog, EvaluationRecord, SearchSpace, Dimension
from moasha.pareto import (
    Candidate,
    Dominance,
    crowding_distance,
    dominates,
    hypervolume,
    hypervolume_mc,
    non_dom_sorting,
    selector_eps_net,
    selector_nsga_ii,
)
from moasha.scalarize import ScalarizationKind, ScalarizedSelector, e_v_score, sample_weight_set, scalarize
from moasha.scheduler import MOASHA, RandomSearch, SynchronousSH, run_mo_asha, run_random_search
from moasha.experiment import ExperimentConfig, run_experiment

__version__ = "0.1.0"
