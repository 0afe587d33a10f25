"""Semantic novelty, t-SNE projection, scatter plots and report assembly."""

from .plot import emit_scatter, group_colors
from .report import assemble_report
from .similarity import (
    SimilarityError,
    SimilarityRow,
    centroid,
    cosine,
    render_similarity_table,
    semantic_similarity,
)
from .tsne import (
    Projection2D,
    TsneConfig,
    TsneError,
    conditional_affinities,
    kl_divergence,
    pairwise_affinities,
    pca_power_iteration,
    student_t_affinities,
    tsne,
)

__all__ = [
    "Projection2D", "SimilarityError", "SimilarityRow", "TsneConfig", "TsneError",
    "assemble_report", "centroid", "conditional_affinities", "cosine", "emit_scatter",
    "group_colors", "kl_divergence", "pairwise_affinities", "pca_power_iteration",
    "render_similarity_table", "semantic_similarity", "student_t_affinities", "tsne",
]
