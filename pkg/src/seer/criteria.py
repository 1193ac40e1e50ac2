"""Multiple-covariance criteria and the quadratic forms behind them.

Writing ``Pi_Z`` for the P-orthogonal projector onto <Z>, the conditioning
context of a single component F is

    B = P Pi_{Z-perp}
    A = tr(Y N Y' P Pi_Z) B + B Y N Y' B

so that ``||F||^2_P tr(Y N Y' P Pi_{<F,Z>}) = F'PF * F'AF / F'BF``.
A and B are never stored densely during fitting: they only enter through
quadratic forms ``U' A V`` that are evaluated with projections onto <Z>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import DegenerateComponent, InsufficientDof
from .linalg import Metric, Weights, _as_basis, max_gen_eig, project, projection_coefficients

DEGENERATE_TOL = 1e-14


def _as_matrix(Y) -> NDArray:
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def _as_metric(N, K: int) -> Metric:
    if N is None:
        return Metric(np.eye(K), "identity")
    if isinstance(N, Metric):
        return N
    return Metric(np.atleast_2d(np.asarray(N, dtype=float)), "custom")


def _norm_product(F_list, w: Weights) -> float:
    return float(np.prod([w.norm2(F) for F in F_list])) if len(F_list) else 1.0


@dataclass(frozen=True, eq=False)
class CriterionContext:
    """Conditioning context of one component: dependent block, weights, Z."""

    Y: NDArray
    N: NDArray
    Z: NDArray
    w: Weights
    Y_resid: NDArray
    trace_term: float

    @property
    def K(self) -> int:
        return self.Y.shape[1]

    def resid(self, U) -> NDArray:
        """Pi_{Z-perp} U."""
        if self.Z.shape[1] == 0:
            return np.asarray(U, dtype=float)
        return project(U, self.Z, self.w)[1]

    def p_form(self, U, V=None):
        return self.w.inner(U, U if V is None else V)

    def b_form(self, U, V=None, U_resid=None, V_resid=None):
        Ur = self.resid(U) if U_resid is None else U_resid
        if V is None and V_resid is None:
            Vr = Ur
        else:
            Vr = self.resid(V) if V_resid is None else V_resid
        return self.w.inner(Ur, Vr)

    def a_form(self, U, V=None, U_resid=None, V_resid=None):
        Ur = self.resid(U) if U_resid is None else U_resid
        if V is None and V_resid is None:
            Vr = Ur
        else:
            Vr = self.resid(V) if V_resid is None else V_resid
        UY = self.w.inner(Ur, self.Y_resid)
        VY = UY if Vr is Ur else self.w.inner(Vr, self.Y_resid)
        return self.trace_term * self.w.inner(Ur, Vr) + UY @ self.N @ VY.T

    @property
    def B(self) -> NDArray:
        """Dense n x n matrix P Pi_{Z-perp} (diagnostics and tests only)."""
        n = self.w.n
        return self.w.p[:, None] * self.resid(np.eye(n))

    @property
    def A(self) -> NDArray:
        B = self.B
        BY = B @ self.Y
        return self.trace_term * B + BY @ self.N @ BY.T


def build_context(Y, N, Z, w: Weights) -> CriterionContext:
    """Context for Y (or a single y) weighted by N, conditioned on Z."""
    Y = _as_matrix(Y)
    Nm = np.atleast_2d(np.asarray(N.M if isinstance(N, Metric) else N, dtype=float))
    if Nm.shape != (Y.shape[1], Y.shape[1]):
        raise ValueError("N must be K x K for a K-column dependent block")
    Z = _as_basis(Z, w.n)
    if Z.shape[1] == 0:
        return CriterionContext(Y, Nm, Z, w, Y.copy(), 0.0)
    fitted, resid = project(Y, Z, w)
    trace_term = float(np.trace(Nm @ w.inner(fitted, fitted)))
    return CriterionContext(Y, Nm, Z, w, resid, trace_term)


@dataclass(frozen=True)
class BetaGamma:
    beta: float
    gamma: float


def beta_gamma(F, ctx: CriterionContext) -> BetaGamma:
    """beta = F'AF / F'BF and gamma = F'PF / F'BF (scale free in F)."""
    F = np.asarray(F, dtype=float)
    Fr = ctx.resid(F)
    fb = float(ctx.w.inner(Fr, Fr))
    fp = float(ctx.w.inner(F, F))
    if fp <= 0 or fb <= DEGENERATE_TOL * fp:
        raise DegenerateComponent("component lies in the span of its conditioning block")
    fa = float(ctx.a_form(F, U_resid=Fr))
    return BetaGamma(fa / fb, fp / fb)


def conditioned_criterion(F, ctx: CriterionContext) -> float:
    """F'PF * F'AF / F'BF: the criterion maximized by one A0 run."""
    bg = beta_gamma(F, ctx)
    return ctx.w.norm2(F) * bg.beta


def c1(F, y, w: Weights) -> float:
    """Covariance criterion <F|y>_P."""
    return float(w.inner(np.asarray(F, float), np.asarray(y, float)))


def _explained(Y, basis, w: Weights) -> NDArray:
    """Weighted Gram of Pi_<basis> Y."""
    fitted = project(_as_matrix(Y), basis, w)[0]
    return w.inner(fitted, fitted)


def c4(y, F_list: Sequence, w: Weights) -> float:
    """||Pi_<F_1..F_R> y||^2_P times the product of the ||F_r||^2_P.

    Equals cos^2(y, <F>) * prod ||F_r||^2 for unit-variance y.
    """
    y = np.asarray(y, dtype=float)
    explained = _explained(y, list(F_list), w)[0, 0] if len(F_list) else 0.0
    return float(explained) * _norm_product(F_list, w)


def c5(Y, N, F_list: Sequence, w: Weights) -> float:
    """tr(Y N Y' P Pi_<F>) times the product of the ||F_r||^2_P."""
    Y = _as_matrix(Y)
    Nm = _as_metric(N, Y.shape[1]).M
    if not len(F_list):
        return 0.0
    return float(np.trace(Nm @ _explained(Y, list(F_list), w))) * _norm_product(F_list, w)


def c5_sum(Y, n_weights, F_list: Sequence, w: Weights) -> float:
    """Sum form of C5 for a diagonal N: sum_k n_k C4(y^k)."""
    Y = _as_matrix(Y)
    return float(sum(nk * c4(Y[:, k], F_list, w) for k, nk in enumerate(n_weights)))


def c6(G, F_list: Sequence, w: Weights) -> float:
    """||G||^2 cos^2(G, <F>) prod ||F_r||^2 = ||Pi_<F> G||^2 prod ||F_r||^2."""
    return c4(G, F_list, w)


def c6_partial_max(F_list: Sequence, Y, N, Z, w: Weights):
    """Maximize C6 over G = YNv, v'Nv = 1, for fixed components.

    eta is the largest eigenvalue of Y N Y' P Pi_<F,Z>.  Returns
    ``(value, G)`` with ``value = prod ||F_r||^2 * eta``.
    """
    Y = _as_matrix(Y)
    Nmet = _as_metric(N, Y.shape[1])
    basis = list(F_list) + [c for c in _as_basis(Z, w.n).T]
    S = _explained(Y, basis, w)
    top = max_gen_eig(S, Nmet, 1)[0]
    G = Y @ (Nmet.M @ top.vector)
    return _norm_product(F_list, w) * top.value, G


def r_squared(y, regressors, w: Weights) -> float:
    y = np.asarray(y, dtype=float)
    fitted = project(y, regressors, w)[0]
    return float(w.norm2(fitted) / w.norm2(y))


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True, eq=False)
class RegressionSummary:
    coefficients: NDArray
    std_errors: NDArray
    t_values: NDArray
    p_values: NDArray
    r2: float
    dof: int

    def rows(self):
        return list(zip(self.coefficients.tolist(), self.p_values.tolist()))


def pseudo_pvalues(y, regressors, w: Weights, standardized: bool = False) -> RegressionSummary:
    """Descriptive weighted-least-squares t-tests of y on centred regressors.

    Weights are rescaled to sum to n and one degree of freedom is charged for
    the (implicit) intercept.  The p-values are descriptive only: components
    built from y are not exogenous regressors.
    """
    y = np.asarray(y, dtype=float)
    Z = _as_basis(regressors, w.n)
    n, S = Z.shape
    dof = n - S - 1
    if dof < 1:
        raise InsufficientDof(f"{n} observations cannot support {S} regressors plus intercept")
    y = y - w.p @ y
    Z = Z - w.p @ Z
    if standardized:
        y = y / np.sqrt(w.norm2(y))
        Z = Z / np.sqrt(w.p @ (Z * Z))
    coef = projection_coefficients(y, Z, w)
    fitted = Z @ coef
    resid = y - fitted
    sigma2 = n * w.norm2(resid) / dof
    cov = sigma2 * np.linalg.inv(n * w.inner(Z, Z))
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se  # exact fits give inf (or nan for a zero coefficient)
    p = 2.0 * stats.t.sf(np.abs(t), dof)
    return RegressionSummary(coef, se, t, p, float(w.norm2(fitted) / w.norm2(y)), dof)
