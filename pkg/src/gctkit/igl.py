"""Isolated Graph Learning: a graph-regularized linear projection classifier.

A projection ``P`` (dim x C) is learned from labeled embeddings by
minimizing

    tr(P' X L X' P) + lam * ||X' P - Y||_F^2 + mu * ||P||_{2,1}

where ``L`` is the normalized operator of the KNN graph over the training
columns. The l2,1 term is handled by iterative reweighting: a diagonal
``B`` replaces it by ``mu * tr(P' B P)``, ``P`` then has a closed form, and
``B`` is recomputed from the rows of ``P``. Prediction needs only ``P``, so
new samples are classified without rebuilding any graph.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import LAPLACIAN_VARIANTS, build_graph, laplacian_operator, normalize_columns
from .numkit import as_matrix, row_l2_norms, solve_spd

B_EPS = 1e-8
B_UPDATES = ("squared", "unsquared")


@dataclass(frozen=True)
class IglConfig:
    lam: float = 0.1
    mu: float = 0.6
    k: int = 10
    laplacian: str = "expanded_laplacian"
    b_update: str = "squared"
    max_iters: int = 50
    rel_tol: float = 1e-6
    normalize_features: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"lambda must be > 0, got {self.lam}")
        if not self.mu >= 0:
            raise ValidationError(f"mu must be >= 0, got {self.mu}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.laplacian not in LAPLACIAN_VARIANTS:
            raise ValidationError(f"unknown Laplacian variant {self.laplacian!r}")
        if self.b_update not in B_UPDATES:
            raise ValidationError(f"unknown B update {self.b_update!r}")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be > 0")


@dataclass(frozen=True)
class LabelMatrix:
    """One-hot ``N x C`` label matrix with the class label of each column."""

    Y: np.ndarray
    class_order: tuple

    def __post_init__(self):
        Y = self.Y
        if Y.ndim != 2 or Y.shape[1] != len(self.class_order):
            raise ValidationError("label matrix shape does not match class_order")
        if not (np.all((Y == 0) | (Y == 1)) and np.all(Y.sum(axis=1) == 1)):
            raise ValidationError("label matrix rows must be one-hot")

    @classmethod
    def from_labels(cls, labels, class_order=None):
        """One-hot encode ``labels``; columns follow sorted labels unless given."""
        labels = list(labels)
        if class_order is None:
            class_order = sorted(set(labels))
        class_order = tuple(class_order)
        index = {c: j for j, c in enumerate(class_order)}
        Y = np.zeros((len(labels), len(class_order)))
        for i, lab in enumerate(labels):
            if lab not in index:
                raise ValidationError(f"label {lab!r} not in class order")
            Y[i, index[lab]] = 1.0
        return cls(Y, class_order)

    @classmethod
    def from_indices(cls, indices, class_order):
        Y = np.zeros((len(indices), len(class_order)))
        Y[np.arange(len(indices)), np.asarray(indices, dtype=int)] = 1.0
        return cls(Y, tuple(class_order))

    def labels(self):
        return [self.class_order[j] for j in np.argmax(self.Y, axis=1)]


@dataclass(frozen=True)
class IglModel:
    P: np.ndarray
    B_diag: np.ndarray
    class_order: tuple
    config: IglConfig
    objectives: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def dim(self):
        return self.P.shape[0]


def update_B(P, variant="squared"):
    """Reweighting diagonal from the rows of ``P``.

    ``squared`` uses ``1 / (2 ||p_i||^2 + 1e-8)``; ``unsquared`` uses
    ``1 / (2 ||p_i|| + 1e-8)``, the classical l2,1 reweighting.
    """
    norms = row_l2_norms(P)
    if variant == "squared":
        return 1.0 / (2.0 * norms**2 + B_EPS)
    if variant == "unsquared":
        return 1.0 / (2.0 * norms + B_EPS)
    raise ValidationError(f"unknown B update {variant!r}")


def system_matrix(X, L, B_diag, cfg):
    """``X L X' + lam X X' + mu diag(B)``, symmetrized against round-off."""
    M = X @ L @ X.T + cfg.lam * (X @ X.T)
    M = 0.5 * (M + M.T)
    M[np.diag_indices_from(M)] += cfg.mu * np.asarray(B_diag)
    return M


def update_P(X, Y, L, B_diag, cfg):
    """Closed-form minimizer of the reweighted objective for fixed ``B``."""
    Y = Y.Y if isinstance(Y, LabelMatrix) else np.asarray(Y, dtype=np.float64)
    X = as_matrix(X, "X")
    if L.shape != (X.shape[1], X.shape[1]):
        raise ValidationError("Laplacian size does not match the number of samples")
    return solve_spd(system_matrix(X, L, B_diag, cfg), cfg.lam * (X @ Y))


def objective(X, Y, P, L, cfg):
    """Value of the unrelaxed objective (true l2,1 norm, not the B surrogate)."""
    Y = Y.Y if isinstance(Y, LabelMatrix) else np.asarray(Y, dtype=np.float64)
    Z = X.T @ P
    smooth = float(np.sum(Z * (L @ Z)))
    fit_term = float(np.sum((Z - Y) ** 2))
    return smooth + cfg.lam * fit_term + cfg.mu * float(row_l2_norms(P).sum())


def _prepare(X, cfg):
    X = as_matrix(X, "X")
    return normalize_columns(X) if cfg.normalize_features else X


def fit(X, Y, cfg=None):
    """Fit a projection on the labeled columns of ``X`` by alternating updates.

    ``B`` starts at the identity. Iteration stops once the relative change of
    the objective drops below ``cfg.rel_tol`` or after ``cfg.max_iters`` P
    updates. The returned model keeps the ``B`` that produced its ``P``.
    """
    cfg = cfg or IglConfig()
    if not isinstance(Y, LabelMatrix):
        raise ValidationError("Y must be a LabelMatrix")
    Xn = _prepare(X, cfg)
    N, C = Y.Y.shape
    if Xn.shape[1] != N:
        raise ValidationError(f"X has {Xn.shape[1]} columns but Y has {N} rows")
    if C < 2:
        raise ValidationError("at least two classes are required")
    if N < C:
        raise ValidationError(f"need at least {C} samples, got {N}")

    L = laplacian_operator(build_graph(Xn, cfg.k), cfg.laplacian)
    B = np.ones(Xn.shape[0])
    objectives = []
    converged = False
    for _ in range(cfg.max_iters):
        P = update_P(Xn, Y, L, B, cfg)
        B_used = B
        objectives.append(objective(Xn, Y, P, L, cfg))
        if len(objectives) > 1:
            prev, cur = objectives[-2], objectives[-1]
            if abs(prev - cur) <= cfg.rel_tol * max(abs(prev), np.finfo(float).tiny):
                converged = True
                break
        B = update_B(P, cfg.b_update)
    return IglModel(
        P=P,
        B_diag=B_used,
        class_order=Y.class_order,
        config=cfg,
        objectives=objectives,
        iterations=len(objectives),
        converged=converged,
    )


def predict_soft(model, X_ts):
    """Raw scores ``X_ts' P``, one row per column of ``X_ts``."""
    X_ts = np.asarray(X_ts, dtype=np.float64)
    if X_ts.ndim != 2 or X_ts.shape[0] != model.dim:
        raise ValidationError(
            f"expected a {model.dim} x M matrix, got shape {X_ts.shape}"
        )
    if X_ts.shape[1] == 0:
        return np.zeros((0, model.P.shape[1]))
    return _prepare(X_ts, model.config).T @ model.P


def argmax_labels(scores, class_order):
    # np.argmax returns the first maximal index, i.e. ties go to the lowest column
    return [class_order[j] for j in np.argmax(scores, axis=1)]


def predict(model, X_ts):
    return argmax_labels(predict_soft(model, X_ts), model.class_order)
