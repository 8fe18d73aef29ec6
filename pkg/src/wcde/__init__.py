"""Graphical criteria and efficient estimation for the weighted controlled direct effect."""

from .adjustment import AdjustmentSet, VasReport, check_vas, enumerate_vas, split_adjustment
from .estimators import (EstimateReport, Family, IfSample, Method, NuisanceModels,
                         asymptotic_variance, estimate, fit_nuisances, if_values,
                         one_step_estimate, plugin_estimate)
from .graph import Dag, build_dag, dag_from_edges
from .query import QuerySpec
from .scm import (Dataset, DiscreteScm, LinearScm, do_expectation, joint_distribution,
                  population_wcde_z, sample, true_wcde)
from .separation import is_d_separated
from .taxonomy import Partition, mediator_sets, oset, partition

__all__ = [
    "AdjustmentSet", "Dag", "Dataset", "DiscreteScm", "EstimateReport", "Family", "IfSample",
    "LinearScm", "Method", "NuisanceModels", "Partition", "QuerySpec", "VasReport",
    "asymptotic_variance", "build_dag", "check_vas", "dag_from_edges", "do_expectation",
    "enumerate_vas", "estimate", "fit_nuisances", "if_values", "is_d_separated",
    "joint_distribution", "mediator_sets", "one_step_estimate", "oset", "partition",
    "plugin_estimate", "population_wcde_z", "sample", "split_adjustment", "true_wcde",
]
