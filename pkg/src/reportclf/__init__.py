"""reportclf: severity classification for clinical-style reports.

Method ladder: bag-of-words baselines (logistic regression, linear SVM,
random forest), word2vec embedding training, a single-layer convolutional
classifier, and an attention extension that explains predictions with
per-token heatmaps. A grid-search harness handles train/dev/test protocol,
model selection, and reporting.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Document,
    Vocabulary,
    build_vocabulary,
    pad_document,
    read_corpus,
    stratified_split,
    tokenize,
    write_corpus,
)
from .synthetic import SyntheticSpec, generate_synthetic  # noqa: F401
from .word2vec import EmbeddingTable, W2vConfig, train_embeddings  # noqa: F401
from .cnn import CnnConfig, CnnModel, initialize_model  # noqa: F401
from .attention import AttentionExplanation, explain  # noqa: F401
