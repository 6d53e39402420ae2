"""Percolation-based simulator for measurement-only circuit ensembles."""

from .analysis import (AnalysisError, EtaPoint, FitResult, angle_average,
                       check_exponent_relations, chord_length, eta_1d, eta_2d,
                       fit_distance_decay, fit_power_law, fss_extrapolate)
from .clusters import (ClusterState, FreeListExhausted, advance_layer,
                       init_state, merge, run_realization, surface_partition)
from .ensembles import EnsembleConfig, Family, LayerBonds, realization_layers
from .experiment import ConfigError, RunConfig, RunResult, run_experiment
from .measures import (MeasureOutcome, SubregionSet, gme_hit, indirect_gme_hit,
                       measure_all, mi_value, place_subregions_1d,
                       place_subregions_2d)
from .stabilizer import StructureError, Tableau, replay_realization
from .tallies import TallyTable
from .weighted_graph import NoHitsError, WeightedGraphAccumulator, convolve

__version__ = "0.1.0"
