"""Random-forest classification and the repeated-split evaluation protocol."""
from .evaluation import (ARI_PAIRS, METHODS, EvalReport, FeatureMatrix, RoundResult, bootstrap_evaluate,
                         misclassification_report)
from .forest import ForestParams, RandomForest, Tree, predict, score, train
from .metrics import accuracy, adjusted_rand_index, confusion_matrix, f1_precision

__all__ = [
    "ARI_PAIRS", "METHODS", "EvalReport", "FeatureMatrix", "ForestParams", "RandomForest", "RoundResult",
    "Tree", "accuracy", "adjusted_rand_index", "bootstrap_evaluate", "confusion_matrix", "f1_precision",
    "misclassification_report", "predict", "score", "train",
]
