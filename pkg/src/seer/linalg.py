"""Weighted-metric linear algebra.

Everything here works with the duality-diagram triplet (X, M, P): a data
matrix X whose columns are variables, a column metric M and diagonal
observation weights P.  Eigenproblems of the shape ``S M u = lambda u`` with
``u'Mu = 1`` are always solved in loading space (J x J) through the Cholesky
factor of M, never in observation space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .errors import ConstantColumn, NotSymmetric, SingularBasis

SINGULAR_RTOL = 1e-12
SYMMETRY_TOL = 1e-10

METRIC_KINDS = ("identity", "inverse_gram", "block_inverse", "custom")


@dataclass(frozen=True, eq=False)
class Weights:
    """Positive observation weights summing to one (the diagonal of P)."""

    p: NDArray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("observation weights must be finite and strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"observation weights must sum to 1 (got {p.sum()!r})")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n: int) -> "Weights":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def normalized(cls, raw) -> "Weights":
        raw = np.asarray(raw, dtype=float).ravel()
        if np.any(raw <= 0):
            raise ValueError("observation weights must be strictly positive")
        return cls(raw / raw.sum())

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def P(self) -> NDArray:
        return np.diag(self.p)

    def inner(self, a, b):
        """P-scalar product ``a'Pb`` (vectors or matrices column-wise)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim == 1:
            return (a * self.p) @ b
        return (a * self.p[:, None]).T @ b

    def norm2(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float((a * a) @ self.p)


@dataclass(frozen=True, eq=False)
class WeightedDataset:
    """A centred (optionally standardized) data matrix with its weights."""

    X: NDArray
    weights: Weights
    column_names: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.weights.n:
            raise ValueError(f"X has {X.shape[0]} rows but weights describe {self.weights.n}")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("column_names length does not match the number of columns")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def J(self) -> int:
        return self.X.shape[1]

    def with_matrix(self, X) -> "WeightedDataset":
        """Same weights and labels around a transformed (e.g. deflated) matrix."""
        return WeightedDataset(X, self.weights, self.column_names)


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric positive definite column metric with its Cholesky factor."""

    M: NDArray
    kind: str = "custom"
    chol: Optional[NDArray] = None

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("metric must be a square matrix")
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
        if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
            raise NotSymmetric("metric matrix is not symmetric")
        M = 0.5 * (M + M.T)
        try:
            L = linalg.cholesky(M, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularBasis("metric matrix is not positive definite") from exc
        M.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "chol", L)

    @property
    def J(self) -> int:
        return self.M.shape[0]

    def norm2(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.M @ u)


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: NDArray


def _as_weights(w) -> Weights:
    return w if isinstance(w, Weights) else Weights(w)


def standardize(raw, w: Weights, mode: str = "center_scale",
                column_names: Sequence[str] = ()) -> WeightedDataset:
    """Centre (and in ``center_scale`` mode scale) columns under weights P.

    Raises
    ------
    ConstantColumn
        In ``center_scale`` mode, when a column's weighted variance is below
        1e-14.
    """
    if mode not in ("center_only", "center_scale"):
        raise ValueError(f"unknown standardization mode {mode!r}")
    X = np.array(raw, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("at least two observations are required")
    names = tuple(column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
    X = X - w.p @ X
    if mode == "center_scale":
        var = w.p @ (X * X)
        for j, v in enumerate(var):
            if v < 1e-14:
                raise ConstantColumn(names[j])
        X = X / np.sqrt(var)
    return WeightedDataset(X, w, names)


def gram(ds: WeightedDataset) -> NDArray:
    """Weighted Gram matrix X'PX."""
    G = ds.weights.inner(ds.X, ds.X)
    return 0.5 * (G + G.T)


def _check_gram(G: NDArray, what: str = "Z'PZ") -> None:
    s = np.linalg.svd(G, compute_uv=False)
    if s.size and (s[-1] <= SINGULAR_RTOL * s[0] or s[0] == 0.0):
        raise SingularBasis(f"{what} is numerically singular (condition {s[0] / max(s[-1], 1e-300):.3g})")


def _as_basis(Z, n: int) -> NDArray:
    if Z is None:
        return np.zeros((n, 0))
    if isinstance(Z, (list, tuple)):
        if len(Z) == 0:
            return np.zeros((n, 0))
        Z = np.column_stack(Z)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return Z


def projection_coefficients(y, Z, w: Weights) -> NDArray:
    """Coefficients c of the P-orthogonal projection ``Z c`` of y onto <Z>."""
    Z = _as_basis(Z, w.n)
    G = w.inner(Z, Z)
    _check_gram(G)
    return linalg.solve(G, w.inner(Z, y), assume_a="sym")


def project(y, Z, w: Weights):
    """P-orthogonal projection of y (vector or matrix) onto the span of Z.

    Returns ``(fitted, residual)``.  An empty Z gives a zero fit.
    """
    y = np.asarray(y, dtype=float)
    Z = _as_basis(Z, w.n)
    if Z.shape[1] == 0:
        return np.zeros_like(y), y.copy()
    fitted = Z @ projection_coefficients(y, Z, w)
    return fitted, y - fitted


def _sign_fix(u: NDArray) -> NDArray:
    i = int(np.argmax(np.abs(u)))  # argmax picks the lowest index on ties
    return -u if u[i] < 0 else u


def max_gen_eig(S, M: Metric, k: int = 1) -> list:
    """Top-k solutions of ``S M u = lambda u`` with ``u'Mu = 1``.

    With ``M = L L'`` the problem is the symmetric ``L' S L w = lambda w``
    and ``u = L'^{-1} w``.  Pairs come back in descending order, each vector
    oriented so that its largest-magnitude entry is positive.
    """
    S = np.asarray(S, dtype=float)
    J = M.J
    if S.shape != (J, J):
        raise ValueError(f"S has shape {S.shape}, metric is {J}x{J}")
    if not 1 <= k <= J:
        raise ValueError(f"k must lie in [1, {J}]")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("S is not symmetric within tolerance")
    S = 0.5 * (S + S.T)
    L = M.chol
    C = L.T @ S @ L
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    out = []
    for i in range(J - 1, J - 1 - k, -1):
        u = linalg.solve_triangular(L.T, vecs[:, i], lower=False)
        out.append(EigenPair(float(vals[i]), _sign_fix(u)))
    return out


def total_inertia(ds: WeightedDataset, M: Metric) -> float:
    """In(X, M, P) = trace(M X'PX)."""
    return float(np.trace(M.M @ gram(ds)))


def triplet_pca(ds: WeightedDataset, M: Metric, k: int):
    """PCA of the triplet (X, M, P).

    Returns ``(components, total_inertia)`` where each component is a tuple
    ``(score F = XMu, loading u, eigenvalue = ||F||_P^2)``.
    """
    pairs = max_gen_eig(gram(ds), M, k)
    comps = [(ds.X @ (M.M @ e.vector), e.vector, e.value) for e in pairs]
    return comps, total_inertia(ds, M)


def largest_eigenvalue(ds: WeightedDataset, M: Metric) -> float:
    """lambda_1(X, M, P)."""
    return max_gen_eig(gram(ds), M, 1)[0].value


def make_metric(kind: str, ds: WeightedDataset, blocks=None, matrix=None) -> Metric:
    """Build a column metric for a dataset.

    ``identity`` gives standard PCA geometry, ``inverse_gram`` flattens the
    group to its subspace, ``block_inverse`` flattens each block of a column
    partition (MCA / generalized canonical correlation geometry).
    ``custom`` wraps a user-supplied matrix.
    """
    J = ds.J
    if kind == "identity":
        return Metric(np.eye(J), "identity")
    if kind == "inverse_gram":
        G = gram(ds)
        _check_gram(G, "X'PX")
        return Metric(linalg.inv(G), "inverse_gram")
    if kind == "block_inverse":
        if blocks is None:
            raise ValueError("block_inverse requires a column partition")
        blocks = [list(b) for b in blocks]
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(J)):
            raise ValueError("blocks must partition the columns exactly once")
        G = gram(ds)
        M = np.zeros((J, J))
        for b in blocks:
            Gb = G[np.ix_(b, b)]
            _check_gram(Gb, f"block {b} Gram")
            M[np.ix_(b, b)] = linalg.inv(Gb)
        return Metric(M, "block_inverse")
    if kind == "custom":
        if matrix is None:
            raise ValueError("custom metric requires a matrix")
        return Metric(matrix, "custom")
    raise ValueError(f"unknown metric kind {kind!r}")
