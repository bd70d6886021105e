"""KNN graph encoding of an episode's feature matrix.

Edges carry the weight ``exp(-d^2)`` between an embedding and its ``k``
nearest neighbours; the neighbour relation is symmetrized by union.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numkit import as_matrix, pairwise_sq_dist

DEGREE_FLOOR = 1e-12
LAPLACIAN_VARIANTS = ("expanded_laplacian", "paper_literal")


@dataclass(frozen=True)
class Graph:
    adjacency: np.ndarray
    degrees: np.ndarray
    k: int

    @property
    def n(self):
        return self.adjacency.shape[0]


def normalize_columns(X):
    """Scale every column of ``X`` to unit L2 norm; zero columns stay zero."""
    X = as_matrix(X, "X")
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    return X / np.where(norms > 0.0, norms, 1.0)


def build_graph(X, k=10):
    """Build the symmetric KNN adjacency over the columns of ``X``.

    ``k`` is clamped to ``N - 1``. Ties in distance are broken toward the
    lower column index so the graph is a deterministic function of ``X``.
    """
    d2 = pairwise_sq_dist(X)
    n = d2.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    k_eff = min(k, n - 1)
    A = np.zeros((n, n))
    if k_eff > 0:
        masked = d2.copy()
        np.fill_diagonal(masked, np.inf)
        nbrs = np.argsort(masked, axis=1, kind="stable")[:, :k_eff]
        selected = np.zeros((n, n), dtype=bool)
        selected[np.repeat(np.arange(n), k_eff), nbrs.ravel()] = True
        selected |= selected.T
        A[selected] = np.exp(-d2[selected])
        np.fill_diagonal(A, 0.0)
    degrees = np.maximum(A.sum(axis=1), DEGREE_FLOOR)
    return Graph(adjacency=A, degrees=degrees, k=k_eff)


def laplacian_operator(g, variant="expanded_laplacian"):
    """Normalized operator built from ``S = D^-1/2 A D^-1/2``.

    ``expanded_laplacian`` returns ``I - S`` (positive semidefinite), with the
    identity restricted to vertices that have at least one edge so that it
    equals the pairwise-difference sum exactly; ``paper_literal`` returns
    ``S`` itself.
    """
    inv_sqrt = 1.0 / np.sqrt(g.degrees)
    S = inv_sqrt[:, None] * g.adjacency * inv_sqrt[None, :]
    if variant == "paper_literal":
        return S
    if variant == "expanded_laplacian":
        return np.diag((g.adjacency.sum(axis=1) > 0).astype(float)) - S
    raise ValidationError(f"unknown Laplacian variant {variant!r}")
