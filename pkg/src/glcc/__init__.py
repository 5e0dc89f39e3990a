"""Graph-level contrastive clustering."""

from glcc.affinity import AffinityGraph, build_affinity, laplacian, normalized_weights, sample_neighbor
from glcc.augment import AugmentationSpec, augment
from glcc.encoder import EmbeddingSet, EncoderConfig, build_encoder, encode, gradients
from glcc.graph import (
    FamilySpec,
    Graph,
    GraphDataset,
    generate_synthetic_mixture,
    load_dataset,
    load_snapshot,
    load_tu_dataset,
    save_snapshot,
    three_family_mixture,
    validate_dataset,
)
from glcc.losses import LossReport, cgc_loss, combined_loss, igc_loss, supcon_loss
from glcc.metrics import MetricsReport, acc, ari, evaluate_labels, kmeans, nmi
from glcc.pseudo import PseudoLabelSet, neighbor_average, select_confident
from glcc.trainer import VARIANTS, TrainConfig, TrainState, checkpoint, evaluate, predict, restore, train

__version__ = "0.1.0"
