"""scikit-learn style front end for the equilibrium solver."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .equilibrium import epsilon_gap, equilibrium
from .exceptions import BadDistribution
from .game import validate_game
from .population import sample_population
from .propagation import propagate


class MeanFieldRouting(TransformerMixin, BaseEstimator):
    """Mean-field equilibrium routing for a traffic game.

    Parameters
    ----------
    alpha : float, optional
        Overrides the tax scale of the game passed to :meth:`fit`.

    Attributes
    ----------
    game_ : GameSpec
    log_phi_ : ndarray of shape (T + 1, V)
        Log-desirability.
    policy_ : ndarray of shape (T, E)
        Equilibrium routing policy.
    distribution_ : ndarray of shape (T + 1, V)
        Population distribution under ``policy_``.
    value_ : float
        Equilibrium cost from the game's initial distribution.
    n_features_in_ : int
        Number of nodes.

    Examples
    --------
    >>> from mfg_route import GameSpec, MeanFieldRouting
    >>> game = GameSpec.build([[0, 1], [1]], 1, {(0, 1): 1.0}, [0, 0], [1, 0], 1.0)
    >>> est = MeanFieldRouting().fit(game)
    >>> round(est.value_, 6)
    0.379885
    """

    def __init__(self, alpha=None):
        self.alpha = alpha

    def fit(self, X, y=None):
        """Solve the game ``X`` (a GameSpec or a game document mapping)."""
        game = validate_game(X)
        if self.alpha is not None:
            game = game.with_alpha(self.alpha)
        logphi, Q, P = equilibrium(game)
        self.game_ = game
        self.log_phi_ = logphi
        self.policy_ = Q
        self.distribution_ = P
        self.value_ = float(-game.alpha * np.dot(game.initial_dist, logphi[0]) + 0.0)
        self.n_features_in_ = game.num_nodes
        return self

    def _check_distributions(self, X):
        check_is_fitted(self)
        X = check_array(np.atleast_2d(X), dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise BadDistribution(
                f"X has {X.shape[1]} columns, expected {self.n_features_in_} (one per node)")
        if np.any(X < 0) or np.any(np.abs(X.sum(axis=1) - 1.0) > 1e-9):
            raise BadDistribution("each row of X must be a probability distribution")
        return X

    def predict(self, X):
        """Equilibrium cost ``-alpha sum_i P[i] log phi_0[i]`` of each initial distribution row."""
        X = self._check_distributions(X)
        return -self.game_.alpha * (X @ self.log_phi_[0]) + 0.0

    def transform(self, X):
        """Distribution at the horizon reached from each row of ``X`` under ``policy_``."""
        X = self._check_distributions(X)
        return np.stack([propagate(row, self.policy_, self.game_.graph)[-1] for row in X])

    def simulate(self, n_agents, seed=0):
        check_is_fitted(self)
        return sample_population(self.game_, self.policy_, n_agents, seed)

    def epsilon(self, n_agents):
        check_is_fitted(self)
        return epsilon_gap(self.game_, n_agents)
