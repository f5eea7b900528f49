"""Bag-of-words text categorisation with optional PCA feature extraction.

The pipeline runs raw documents through stop-word removal and Porter
stemming, builds a weighted document-term matrix, optionally projects it
onto the principal components that retain a chosen share of the variance,
and evaluates four classifiers (random forest, linear SVM, C4.5 tree and
k-nearest neighbours) by stratified cross-validation.
"""

from .classifiers import (C45Classifier, KNNClassifier, LinearSVMClassifier,
                          RandomForestClassifier, TrainConfig, make_classifier)
from .corpus import LabeledSparseMatrix, RawDocument, load_dataset
from .evaluation import ConfusionMatrix, EvalReport, PipelineConfig, cross_validate
from .indexing import TermWeighter, Vocabulary, WeightingScheme, index_documents
from .pca import VariancePCA, fit_pca, project
from .porter import porter_stem
from .preprocess import StopList, TextPreprocessor, preprocess_text

__version__ = "0.1.0"

__all__ = [
    "C45Classifier", "KNNClassifier", "LinearSVMClassifier", "RandomForestClassifier",
    "TrainConfig", "make_classifier", "LabeledSparseMatrix", "RawDocument", "load_dataset",
    "ConfusionMatrix", "EvalReport", "PipelineConfig", "cross_validate", "TermWeighter",
    "Vocabulary", "WeightingScheme", "index_documents", "VariancePCA", "fit_pca", "project",
    "porter_stem", "StopList", "TextPreprocessor", "preprocess_text",
]
