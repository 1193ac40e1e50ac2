"""Single predictor group methods: PLS1, Q2/Q3 rank-1 solves, MRA, LN-PLS2.

All solutions come from direct symmetric eigensolves (no NIPALS loop).  The
group metric is never recomputed on deflated matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np
from numpy.typing import NDArray

from .errors import NullCovariance
from .linalg import Metric, WeightedDataset, Weights, make_metric, max_gen_eig, project

NULL_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Component:
    """A score vector paired with its loading in group space.

    ``score = X_deflated M loading`` with ``loading' M loading = 1``; the score
    is *not* standardized, its P-variance is the component's structural
    strength.
    """

    score: NDArray
    loading: NDArray
    group: str
    rank: int
    eigenvalue: float


def standardized_score(F, w: Weights) -> NDArray:
    F = np.asarray(F, dtype=float)
    return F / np.sqrt(w.norm2(F))


@dataclass(eq=False)
class DeflationState:
    """Residual matrix of a group after regression on extracted scores."""

    original: WeightedDataset
    residual: NDArray
    extracted: List[NDArray] = field(default_factory=list)

    @classmethod
    def start(cls, ds: WeightedDataset) -> "DeflationState":
        return cls(ds, np.array(ds.X), [])

    @property
    def dataset(self) -> WeightedDataset:
        return self.original.with_matrix(self.residual)


def deflate(state: DeflationState, F, w: Weights) -> DeflationState:
    """Regress the original matrix on all extracted scores plus F.

    A score already inside the extracted span leaves the state unchanged.
    """
    F = np.asarray(F, dtype=float)
    if w.norm2(F) <= 0:
        raise ValueError("cannot deflate on a zero score")
    if state.extracted:
        fresh = project(F, np.column_stack(state.extracted), w)[1]
        if w.norm2(fresh) <= 1e-20 * w.norm2(F):
            return state
    extracted = state.extracted + [F]
    residual = project(state.original.X, np.column_stack(extracted), w)[1]
    return DeflationState(state.original, residual, extracted)


def pls1_rank1(X: WeightedDataset, M: Metric, y, group: str = "X", rank: int = 1) -> Component:
    """Rank-1 PLS1 component: u = X'Py / ||X'Py||_M and F = XMu."""
    w = X.weights
    c = w.inner(X.X, np.asarray(y, dtype=float))
    lam2 = float(c @ M.M @ c)
    lam = np.sqrt(max(lam2, 0.0))
    if lam < NULL_TOL:
        raise NullCovariance(f"group {group!r} has no covariance with the response")
    u = c / lam
    return Component(X.X @ (M.M @ u), u, group, rank, lam)


def pls1(X: WeightedDataset, M: Metric, y, K: int, group: str = "X") -> List[Component]:
    """K PLS1 components, each solved on the matrix deflated on the previous ones.

    A null covariance after rank 1 truncates the list with a warning.
    """
    w = X.weights
    state = DeflationState.start(X)
    comps = []
    for k in range(1, K + 1):
        try:
            comp = pls1_rank1(state.dataset, M, y, group, k)
        except NullCovariance:
            if k == 1:
                raise
            warnings.warn(f"PLS1 stopped at rank {k - 1}: no covariance left", RuntimeWarning)
            break
        comps.append(comp)
        state = deflate(state, comp.score, w)
    return comps


def q3_rank1(X: WeightedDataset, M: Metric, Y: WeightedDataset, N: Metric,
             x_group: str = "X", y_group: str = "Y", rank: int = 1):
    """Rank-1 solution of max <XMu | YNv>_P under u'Mu = v'Nv = 1.

    u is the top eigenvector of ``X'PY N Y'PX M u = eta u``; v follows from
    ``v = Y'P F / sqrt(eta)``.  Returns ``(F, G, eta)``.
    """
    w = X.weights
    XtPY = w.inner(X.X, Y.X)
    S = XtPY @ N.M @ XtPY.T
    top = max_gen_eig(S, M, 1)[0]
    eta = top.value
    if eta < NULL_TOL**2 * max(1.0, float(np.abs(S).max())):
        raise NullCovariance(f"groups {x_group!r} and {y_group!r} have zero cross-covariance")
    u = top.vector
    F = X.X @ (M.M @ u)
    v = w.inner(Y.X, F) / np.sqrt(eta)
    G = Y.X @ (N.M @ v)
    return (Component(F, u, x_group, rank, eta), Component(G, v, y_group, rank, eta), eta)


def q2_rank1(X: WeightedDataset, M: Metric, Y: WeightedDataset, N: Metric,
             group: str = "X") -> Component:
    """X-component maximizing sum_k n_k <XMu|y^k>^2 (same F as q3_rank1)."""
    return q3_rank1(X, M, Y, N, x_group=group)[0]


def _basis_dataset(F_basis, w: Weights) -> WeightedDataset:
    F_basis = np.asarray(F_basis, dtype=float)
    if F_basis.ndim == 1:
        F_basis = F_basis[:, None]
    return WeightedDataset(F_basis, w)


def mra_components(F_basis, Y: WeightedDataset, N: Metric, L: int,
                   group: str = "Y") -> List[Component]:
    """Redundancy analysis of (Y, N, P) onto <F_basis>, L components.

    G^k is the rank-1 solution of Q3 with the F side flattened to its span
    (metric (F'PF)^-1) and Y deflated on G^1..G^{k-1}.
    """
    w = Y.weights
    Fds = _basis_dataset(F_basis, w)
    Mf = make_metric("inverse_gram", Fds)
    state = DeflationState.start(Y)
    comps = []
    for k in range(1, L + 1):
        G = q3_rank1(state.dataset, N, Fds, Mf, x_group=group, y_group="<F>", rank=k)[0]
        comps.append(G)
        state = deflate(state, G.score, w)
    return comps


def ln_pls2(X: WeightedDataset, M: Metric, Y: WeightedDataset, N: Metric, Kx: int, Ky: int,
            x_group: str = "X", y_group: str = "Y"):
    """Locally nested PLS2.

    F^k solves Q3 on X deflated on F^1..F^{k-1} against the full Y; the
    Y-components are then the MRA of (Y, N, P) onto <F^1..F^Kx>.
    """
    w = X.weights
    state = DeflationState.start(X)
    F_list = []
    for k in range(1, Kx + 1):
        F = q3_rank1(state.dataset, M, Y, N, x_group=x_group, y_group=y_group, rank=k)[0]
        F_list.append(F)
        state = deflate(state, F.score, w)
    G_list = mra_components(np.column_stack([F.score for F in F_list]), Y, N, Ky, group=y_group) if Ky else []
    return F_list, G_list
