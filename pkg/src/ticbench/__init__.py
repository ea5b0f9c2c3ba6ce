"""Fine-tuning-free transferability estimation for time-series forecasters.

The pipeline characterizes datasets with statistical features, models with
layer-entropy profiles, joins both with observed performance into context
tables, predicts target performance with an in-context regressor, and
scores the resulting model rankings against ground truth.
"""

from .ingest import (
    LayerEmbeddings,
    PerformanceRecord,
    SeriesDataset,
    TaskSpec,
    Window,
    load_dataset,
    load_embeddings,
    load_performance,
    sample_windows,
)
from .features import FeatureCatalog, default_catalog, extract_features, extract_matrix
from .selection import PartitionConfig, SelectionResult, greedy_select, total_variance
from .entropy import EntropyProfile, entropy_profile, kl_entropy, subsample_profile
from .tables import (
    CharacteristicRow,
    ContextTable,
    ScenarioSpec,
    TargetTable,
    build_rows,
    build_scenario_context,
    truncate_context,
)
from .icl import PredictorConfig, ScoreRecord, predict_in_context, transferability_score
from .metrics import RankingReport, evaluate_ranking, mase, spearman, weighted_kendall

__version__ = "0.1.0"

__all__ = [
    "LayerEmbeddings", "PerformanceRecord", "SeriesDataset", "TaskSpec", "Window",
    "load_dataset", "load_embeddings", "load_performance", "sample_windows",
    "FeatureCatalog", "default_catalog", "extract_features", "extract_matrix",
    "PartitionConfig", "SelectionResult", "greedy_select", "total_variance",
    "EntropyProfile", "entropy_profile", "kl_entropy", "subsample_profile",
    "CharacteristicRow", "ContextTable", "ScenarioSpec", "TargetTable",
    "build_rows", "build_scenario_context", "truncate_context",
    "PredictorConfig", "ScoreRecord", "predict_in_context", "transferability_score",
    "RankingReport", "evaluate_ranking", "mase", "spearman", "weighted_kendall",
]
