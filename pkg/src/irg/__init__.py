"""Inhomogeneous random graphs G(n, K) at density ln(n)/n: sampling, kernel functionals,
connectivity bounds, partition graphs and Monte Carlo experiments."""

from .bounds import (
    BoundInputs,
    chernoff_rate,
    cut_bound_large_k,
    cut_bound_small_k,
    exact_connectivity_finite,
    gilbert_connectivity_exact,
    isolated_expectation_lower_bound,
    min_component_fraction,
)
from .errors import IRGInputError, ResourceGuardError
from .experiment import (
    ExperimentPlan,
    SweepRecord,
    counterexample_experiment,
    run_plan,
    size_gap_experiment,
    window_experiment,
)
from .graph import ComponentSummary, connected_components, isolated_in_region, min_component_size
from .kernel import (
    Block,
    Constant,
    Counterexample,
    Kernel,
    Scaled,
    TorusBand,
    TorusProfile,
    evaluate,
    is_l2,
    isolation_parameter,
    lambda2,
    lambda_,
    parse_kernel,
)
from .partition import (
    build_partition,
    build_partition_graph,
    irreducibility_probe,
    lower_kernel,
    main_component,
    occupancy_check,
)
from .sampler import SampledGraph, read_edge_list, sample_graph, write_edge_list
from .space import FiniteWeighted, UnitInterval, UnitTorus, cell_measure, parse_space, sample_points

__version__ = "0.1.0"
