"""Prioritize STPA unsafe control actions by severity-impact and simulated expert judgement."""

__version__ = "0.1.0"

from .ej import SawRanker, initial_ranking, normalize, rank_competition, saw, score_matrix
from .ingestion import (
    DatasetManifest,
    aggregate_experts,
    load_dataset_json,
    parse_dataset,
    score_intensity,
)
from .matrix import (
    PrioritizationMatrix,
    PriorityMatrix,
    build_matrix,
    cell_priority,
    invert_ej,
    priority_counts,
    render,
    scale_axis,
)
from .mcs import (
    MonteCarloRanker,
    RankDistribution,
    SimulationConfig,
    classify_stability,
    final_ej_ordering,
    perturb,
    run_mcs,
    summarize,
)
from .model import (
    Controller,
    Criterion,
    CriterionScores,
    Dataset,
    MonteCarloStats,
    Priority,
    PriorityRecord,
    Stability,
    SubLoss,
    UcaRecord,
    validate_record,
)
from .pipeline import fixture_manifest, load_results, run_pipeline, write_outputs
from .sif import assign_pms, compute_sif, derive_cif_ranking, lookup_cif, sif_table

__all__ = [
    "Controller", "Criterion", "CriterionScores", "Dataset", "DatasetManifest",
    "MonteCarloRanker", "MonteCarloStats", "PrioritizationMatrix", "Priority", "PriorityMatrix",
    "PriorityRecord", "RankDistribution", "SawRanker", "SimulationConfig", "Stability", "SubLoss",
    "UcaRecord", "aggregate_experts", "assign_pms", "build_matrix", "cell_priority",
    "classify_stability", "compute_sif", "derive_cif_ranking", "final_ej_ordering", "fixture_manifest",
    "initial_ranking", "invert_ej", "load_dataset_json", "load_results", "lookup_cif", "normalize",
    "parse_dataset", "perturb", "priority_counts", "rank_competition", "render", "run_mcs", "run_pipeline", "saw",
    "scale_axis", "score_intensity", "score_matrix", "sif_table", "summarize", "validate_record",
    "write_outputs",
]
