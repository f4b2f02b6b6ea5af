"""scikit-learn style estimator facade over the network + training loop.

X rows are database bit patterns, y rows the corresponding hit patterns
(both binary, shape (n_samples, n_channels)).  Hyperparameters mirror
``LossConfig`` / ``OptimizerConfig``; fitted state lands in trailing-
underscore attributes so ``clone`` and ``get_params`` behave.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .network import (
    FlagMode,
    NetworkShape,
    SynapseMode,
    build_network,
    propagate,
)
from .training import (
    LossConfig,
    OptimizerConfig,
    TrainingExample,
    predict_hits,
    train,
)


def _as_bit_matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty")
    vals = np.unique(m)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    return m.astype(int)


class IGOQNNClassifier(ClassifierMixin, BaseEstimator):
    """Multilabel bit classifier backed by the oracular network.

    The number of database channels is inferred from X at fit time; the
    hidden topology and training knobs are constructor parameters.
    """

    def __init__(self, hidden_widths=(2,), synapse_mode="null_consistent",
                 flag_mode="parity", loss="bce", l1_strength=0.0,
                 epsilon_clip=1e-7, optimizer="adam", learning_rate=0.1,
                 beta1=0.9, beta2=0.999, adam_epsilon=1e-8,
                 spsa_a=0.2, spsa_c=0.1, spsa_alpha=0.602, spsa_gamma=0.101,
                 spsa_stability=0.0, gradient="parameter_shift",
                 fd_step=1e-5, max_epochs=100, seed=0, threshold=0.5):
        self.hidden_widths = hidden_widths
        self.synapse_mode = synapse_mode
        self.flag_mode = flag_mode
        self.loss = loss
        self.l1_strength = l1_strength
        self.epsilon_clip = epsilon_clip
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_epsilon = adam_epsilon
        self.spsa_a = spsa_a
        self.spsa_c = spsa_c
        self.spsa_alpha = spsa_alpha
        self.spsa_gamma = spsa_gamma
        self.spsa_stability = spsa_stability
        self.gradient = gradient
        self.fd_step = fd_step
        self.max_epochs = max_epochs
        self.seed = seed
        self.threshold = threshold

    def _configs(self) -> tuple[LossConfig, OptimizerConfig]:
        return (LossConfig(kind=self.loss, l1_strength=self.l1_strength,
                           epsilon_clip=self.epsilon_clip),
                OptimizerConfig(kind=self.optimizer,
                                learning_rate=self.learning_rate,
                                beta1=self.beta1, beta2=self.beta2,
                                adam_epsilon=self.adam_epsilon,
                                spsa_a=self.spsa_a, spsa_c=self.spsa_c,
                                spsa_alpha=self.spsa_alpha,
                                spsa_gamma=self.spsa_gamma,
                                spsa_stability=self.spsa_stability,
                                max_epochs=self.max_epochs, seed=self.seed,
                                gradient=self.gradient, fd_step=self.fd_step))

    def fit(self, X, y):
        X = _as_bit_matrix(X, "X")
        y = _as_bit_matrix(y, "y")
        if X.shape != y.shape:
            raise ValueError(f"X and y shapes differ: {X.shape} vs {y.shape}")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        shape = NetworkShape(n_database=X.shape[1],
                             hidden_widths=tuple(int(w) for w in self.hidden_widths))
        self.network_ = build_network(shape,
                                      synapse_mode=SynapseMode(self.synapse_mode),
                                      flag_mode=FlagMode(self.flag_mode))
        dataset = [TrainingExample(tuple(xr), tuple(yr))
                   for xr, yr in zip(X, y)]
        loss_config, optimizer_config = self._configs()
        self.report_ = train(self.network_, dataset, loss_config,
                             optimizer_config)
        self.bindings_ = self.report_.final_bindings
        self.n_features_in_ = X.shape[1]
        return self

    def _check_X(self, X) -> np.ndarray:
        check_is_fitted(self, "bindings_")
        X = _as_bit_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} channels, "
                             f"fit saw {self.n_features_in_}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Per-channel hit marginals, shape (n_samples, n_channels)."""
        X = self._check_X(X)
        return np.array([propagate(self.network_, self.bindings_, tuple(row))
                         for row in X])

    def predict(self, X) -> np.ndarray:
        """Thresholded hit bits (ties resolve to 0)."""
        X = self._check_X(X)
        return np.array([predict_hits(self.network_, self.bindings_,
                                      tuple(row), self.threshold)
                         for row in X])

    # ClassifierMixin.score -> subset accuracy on multilabel targets,
    # which is exactly the exact-match metric the training loop records.
