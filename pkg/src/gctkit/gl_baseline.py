"""Transductive label propagation over a single KNN graph.

Minimizes ``tr(R' L R) + beta * ||R - Y||_F^2`` over the soft labels ``R``
of every vertex, labeled or not, i.e. solves ``(L + beta I) R = beta Y``.
Unlike IGL, a new sample can only be labeled by rebuilding the graph with
it included and solving again.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import GctError, SingularMatrixError, ValidationError
from .graph import LAPLACIAN_VARIANTS, build_graph, laplacian_operator, normalize_columns
from .numkit import as_matrix, solve_spd


@dataclass(frozen=True)
class GlConfig:
    beta: float = 1.0
    k: int = 10
    laplacian: str = "expanded_laplacian"
    normalize_features: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if self.laplacian not in LAPLACIAN_VARIANTS:
            raise ValidationError(f"unknown Laplacian variant {self.laplacian!r}")


@dataclass(frozen=True)
class PropagationResult:
    R: np.ndarray
    unlabeled_index: np.ndarray
    predicted: np.ndarray


def propagation_operator(X_all, cfg):
    X = as_matrix(X_all, "X_all")
    if cfg.normalize_features:
        X = normalize_columns(X)
    return laplacian_operator(build_graph(X, cfg.k), cfg.laplacian)


def gl_propagate(X_all, Y_init, cfg=None):
    """Propagate ``Y_init`` (zero rows = unlabeled) over the graph of ``X_all``.

    ``predicted`` holds the argmax column for each unlabeled row, in the
    order given by ``unlabeled_index``.
    """
    cfg = cfg or GlConfig()
    Y = as_matrix(Y_init, "Y_init")
    L = propagation_operator(X_all, cfg)
    if Y.shape[0] != L.shape[0]:
        raise ValidationError(f"Y_init has {Y.shape[0]} rows, graph has {L.shape[0]} vertices")
    labeled = Y.sum(axis=1) > 0
    if not np.all(Y[labeled].sum(axis=0) > 0):
        raise ValidationError("every class needs at least one labeled row")

    M = L + cfg.beta * np.eye(L.shape[0])
    try:
        R = solve_spd(M, cfg.beta * Y)
    except SingularMatrixError:
        # the literal operator is not PSD, so M can be indefinite yet invertible
        try:
            R = linalg.solve(M, cfg.beta * Y, assume_a="sym")
        except linalg.LinAlgError as exc:
            raise GctError(f"propagation system is singular: {exc}") from exc
    unlabeled = np.flatnonzero(~labeled)
    return PropagationResult(R=R, unlabeled_index=unlabeled, predicted=np.argmax(R[unlabeled], axis=1))


def run_episode_gl(ep, data, cfg=None, modality="a"):
    """Accuracy of label propagation on one view over support, pool and queries."""
    cfg = cfg or GlConfig()
    view = data.modality_a if modality == "a" else data.modality_b
    class_order = tuple(sorted(ep.class_roster))
    col = {c: j for j, c in enumerate(class_order)}
    ids = tuple(ep.support) + tuple(ep.unlabeled) + tuple(ep.query)
    pos = data.positions(ids)
    Y = np.zeros((len(ids), len(class_order)))
    for i, p in enumerate(pos[: len(ep.support)]):
        Y[i, col[data.labels[p]]] = 1.0
    res = gl_propagate(view.columns(pos), Y, cfg)
    q0 = len(ep.support) + len(ep.unlabeled)
    R_q = res.R[q0:]
    predicted = [class_order[j] for j in np.argmax(R_q, axis=1)]
    truth = [data.labels[p] for p in pos[q0:]]
    return sum(a == b for a, b in zip(predicted, truth)) / len(truth)
