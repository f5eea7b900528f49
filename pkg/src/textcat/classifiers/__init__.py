"""The four text classifiers behind a common fit/predict interface."""

from dataclasses import asdict, dataclass

from .forest import RandomForestClassifier, forest_classify
from .knn import KNNClassifier, knn_classify
from .svm import LinearSVMClassifier, svm_classify
from .tree import C45Classifier, gain_ratio, information_gain, train_tree, tree_classify

__all__ = [
    "C45Classifier", "KNNClassifier", "LinearSVMClassifier", "RandomForestClassifier",
    "TrainConfig", "ALGORITHMS", "make_classifier", "gain_ratio", "information_gain",
    "train_tree", "tree_classify", "knn_classify", "forest_classify", "svm_classify",
]

ALGORITHMS = ("rf", "svm", "j48", "knn")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for every algorithm; only the selected one's fields are used.

    Defaults follow WEKA 3.8 (IBk, J48, RandomForest, SMO).
    """

    algorithm: str = "rf"
    knn_k: int = 1
    tree_min_leaf: int = 2
    tree_confidence: float = 0.25
    tree_prune: bool = True
    forest_trees: int = 100
    forest_subspace: object = "log2+1"
    forest_min_leaf: int = 1
    forest_criterion: str = "gain"
    svm_c: float = 1.0
    svm_epochs: int = 1000
    svm_tolerance: float = 1e-3
    svm_normalize: bool = True
    rng_seed: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        for name in ("knn_k", "tree_min_leaf", "forest_trees", "forest_min_leaf", "svm_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.svm_c <= 0:
            raise ValueError("svm_c must be > 0")
        if not 0 < self.tree_confidence < 1:
            raise ValueError("tree_confidence must be in (0, 1)")

    def to_dict(self):
        return asdict(self)

    def build(self):
        return make_classifier(self)


def make_classifier(cfg):
    """Unfitted estimator for a :class:`TrainConfig`."""
    if cfg.algorithm == "knn":
        return KNNClassifier(n_neighbors=cfg.knn_k)
    if cfg.algorithm == "j48":
        return C45Classifier(min_samples_leaf=cfg.tree_min_leaf, confidence=cfg.tree_confidence,
                             prune=cfg.tree_prune, random_state=cfg.rng_seed)
    if cfg.algorithm == "rf":
        return RandomForestClassifier(n_estimators=cfg.forest_trees,
                                      max_features=cfg.forest_subspace,
                                      criterion=cfg.forest_criterion,
                                      min_samples_leaf=cfg.forest_min_leaf,
                                      random_state=cfg.rng_seed)
    return LinearSVMClassifier(C=cfg.svm_c, tol=cfg.svm_tolerance, max_epochs=cfg.svm_epochs,
                               normalize=cfg.svm_normalize, random_state=cfg.rng_seed)
