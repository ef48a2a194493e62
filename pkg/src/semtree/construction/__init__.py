from .bottom_up import (
    DEFAULT_MAX_BRANCHING,
    ConstructionError,
    LlmSummarizer,
    build_bottom_up,
    create_nodes_from_clusters,
    metadata_initial_clusters,
)
from .clustering import check_partition, chunk_partition, default_clustering
from .embeddings import HashEmbedder, embed_all
from .manifest import BuildManifest
from .top_down import (
    MultiLevelSummary,
    Topic,
    TopicClustering,
    build_top_down,
    cluster_llm,
    generate_multilevel_summaries,
    select_summary_level,
)

__all__ = [
    "DEFAULT_MAX_BRANCHING",
    "BuildManifest",
    "ConstructionError",
    "HashEmbedder",
    "LlmSummarizer",
    "MultiLevelSummary",
    "Topic",
    "TopicClustering",
    "build_bottom_up",
    "build_top_down",
    "check_partition",
    "chunk_partition",
    "cluster_llm",
    "create_nodes_from_clusters",
    "default_clustering",
    "embed_all",
    "generate_multilevel_summaries",
    "metadata_initial_clusters",
    "select_summary_level",
]
