# core/classifier_engine.py

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import TrainingDataError


logger = logging.getLogger(__name__)


PROJECTED_GRADIENT_TOL = 1e-9


@dataclass
class LinearClassifier:
    """
    Linear max-margin classifier on standardized inputs. `classes` holds the
    (negative, positive) label pair; decision values > 0 mean positive.
    """

    weights: np.ndarray
    bias: float
    C: float
    classes: tuple
    mean: np.ndarray
    scale: np.ndarray
    feature_names: tuple = ()

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def decision_function(self, X) -> np.ndarray:
        return self.standardize(X) @ self.weights + self.bias

    def predict(self, X) -> list:
        negative, positive = self.classes
        return [positive if value > 0 else negative for value in self.decision_function(X)]

    def hinge_loss(self, X, y) -> float:
        signs = _signs(y, self.classes)
        return float(np.maximum(0.0, 1.0 - signs * self.decision_function(X)).sum())

    def objective(self, X, y) -> float:
        return 0.5 * float(self.weights @ self.weights + self.bias ** 2) + self.C * self.hinge_loss(X, y)

    def check_finite(self) -> None:
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("classifier weights are not finite")


def _signs(y, classes) -> np.ndarray:
    negative, positive = classes
    return np.array([1.0 if label == positive else -1.0 for label in y])


def train_classifier(X, y, C: float = 1.0, epochs: int = 200, seed: int = 0,
                     feature_names=(), positive=None) -> LinearClassifier:
    """
    L2-regularized hinge-loss linear classifier,
    0.5 * (|w|^2 + b^2) + C * sum(max(0, 1 - y (w.x + b))),
    fitted by dual coordinate descent over the examples in a seeded order.
    This minimizes the same primal objective as hinge subgradient descent,
    but each step is an exact clipped update of one dual variable, so no
    step-size schedule is needed and `epochs` bounds the number of passes.
    The bias is learned as the weight of a constant input.
    """

    X = np.asarray(X, dtype=float)
    labels = list(y)

    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("feature matrix and labels do not line up")

    distinct = sorted(set(labels), key=str)
    if len(distinct) != 2:
        raise TrainingDataError(f"classifier needs exactly two classes, got {distinct}")

    if positive is None:
        positive = distinct[1]
    negative = distinct[0] if distinct[1] == positive else distinct[1]
    classes = (negative, positive)

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0

    Z = np.hstack([(X - mean) / scale, np.ones((X.shape[0], 1))])
    signs = _signs(labels, classes)
    diagonal = np.einsum("ij,ij->i", Z, Z)

    alpha = np.zeros(Z.shape[0])
    w = np.zeros(Z.shape[1])
    rng = np.random.default_rng(seed)

    for epoch in range(1, epochs + 1):
        largest = 0.0

        for i in rng.permutation(Z.shape[0]):
            gradient = signs[i] * (w @ Z[i]) - 1.0

            if alpha[i] <= 0.0:
                projected = min(gradient, 0.0)
            elif alpha[i] >= C:
                projected = max(gradient, 0.0)
            else:
                projected = gradient

            largest = max(largest, abs(projected))

            if projected != 0.0:
                previous = alpha[i]
                alpha[i] = min(max(previous - gradient / diagonal[i], 0.0), C)
                w += (alpha[i] - previous) * signs[i] * Z[i]

        if largest < PROJECTED_GRADIENT_TOL:
            logger.debug("classifier converged after %d epochs", epoch)
            break

    classifier = LinearClassifier(
        weights=w[:-1].copy(),
        bias=float(w[-1]),
        C=C,
        classes=classes,
        mean=mean,
        scale=scale,
        feature_names=tuple(feature_names),
    )
    classifier.check_finite()

    return classifier
