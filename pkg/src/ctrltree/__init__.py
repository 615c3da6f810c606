"""ctrltree: compress controller lookup tables into small, explainable
decision trees, exactly or as a safe determinized subset."""

from . import errors
from .bench import ExperimentResult, format_results, run_experiments
from .builder import (
    BuildConfig,
    BuildSession,
    build_tree,
    retrain_subtree,
    select_predicate,
)
from .export import export_c, export_dot, export_json, import_json
from .impurity import (
    Determinizer,
    DetMode,
    ImpurityMeasure,
    common_actions,
    determinize_preprocess,
    node_impurity,
    split_impurity,
)
from .ingest import (
    parse_controller_csv,
    parse_domain_knowledge,
    parse_expression,
    parse_metadata,
    parse_strategy_json,
    serialize_controller_csv,
)
from .model import (
    Controller,
    DecisionTree,
    NodeView,
    VariableMeta,
    evaluate_tree,
    lookup,
    tree_stats,
)
from .predicates import (
    axis_aligned_candidates,
    categorical_grouping,
    eval_predicate,
    instantiate_templates,
    linear_candidates,
)
from .simulate import DecisionPath, Simulation, decision_path, parse_transitions

__version__ = "0.1.0"
