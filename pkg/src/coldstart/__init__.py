"""Representative subset selection for cold-start labelling."""
from .metricspace import (
    Metric,
    Objectives,
    PointSet,
    Selection,
    assign_voronoi,
    brute_force_optimal,
    distance,
    evaluate,
    objective_kmedoids,
    objective_maximin,
    objective_minimax,
)
from .selectors import (
    GreedyTrace,
    MinimaxConfig,
    greedy_k_center,
    k_medoids,
    local_one_center,
    random_class_balanced,
    random_select,
    refine_maximin,
    refine_minimax,
    select,
)

__version__ = "0.1.0"
