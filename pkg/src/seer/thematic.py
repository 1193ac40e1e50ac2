"""Multiple predictor group algorithms.

The building block is :func:`a0`, a fixed-point iteration maximizing

    C(F) = F'PF * F'AF / F'BF,    F = XMu, u'Mu = 1

for one component conditioned on a block Z.  :func:`a1` / :func:`a2` cycle
it over one component per predictor group, :func:`a3` over several locally
nested components per group, :func:`b1` / :func:`b2` co-determine the
dependent group components.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .criteria import build_context, c5, c6, CriterionContext
from .errors import DegenerateComponent, NoConvergence, NoConvergenceWarning
from .linalg import (Metric, WeightedDataset, Weights, largest_eigenvalue, max_gen_eig, project,
                     projection_coefficients, total_inertia, triplet_pca)
from .pls import Component, mra_components

log = logging.getLogger(__name__)

INIT_KINDS = ("first_pc", "column", "given_vector")
OMEGA_KINDS = ("inv_inertia", "inv_lambda1")
_DEGENERATE_GAP = 1e-11
_MAX_BACKTRACK = 40
_MONOTONE_RTOL = 1e-12


@dataclass(frozen=True)
class ConvergenceOptions:
    component_tol: float = 1e-9
    inner_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 200
    init: str = "first_pc"
    init_column: int = 0
    init_vectors: Optional[Dict[str, NDArray]] = None
    strict: bool = False

    def __post_init__(self):
        if self.component_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}")


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A named variable group, its metric and the number of components wanted."""

    name: str
    data: WeightedDataset
    metric: Metric
    n_components: int = 1

    @property
    def X(self) -> NDArray:
        return self.data.X


@dataclass(frozen=True, eq=False)
class ThematicModel:
    """Dependent group, ordered predictor groups and fitting options.

    ``control_own_lower`` adds a group's own lower-rank components to the
    conditioning block of its rank-j component.  Off by default: with it off
    a single-group model reproduces LN-PLS2 exactly.
    """

    dependent: GroupSpec
    predictors: Sequence[GroupSpec]
    options: ConvergenceOptions = ConvergenceOptions()
    control_own_lower: bool = False

    def __post_init__(self):
        object.__setattr__(self, "predictors", tuple(self.predictors))
        if not self.predictors:
            raise ValueError("a thematic model needs at least one predictor group")
        names = [g.name for g in self.predictors] + [self.dependent.name]
        if len(set(names)) != len(names):
            raise ValueError("group names must be unique")
        for g in (*self.predictors, self.dependent):
            if g.n_components < 0:
                raise ValueError(f"group {g.name!r}: negative component count")
            rank = np.linalg.matrix_rank(g.X * np.sqrt(g.data.weights.p)[:, None])
            if g.n_components > rank:
                raise ValueError(f"group {g.name!r}: {g.n_components} components exceed rank {rank}")

    @property
    def weights(self) -> Weights:
        return self.dependent.data.weights

    def group(self, name: str) -> GroupSpec:
        for g in self.predictors:
            if g.name == name:
                return g
        raise KeyError(name)

    def with_counts(self, counts: Dict[str, int]) -> "ThematicModel":
        preds = [replace(g, n_components=counts.get(g.name, g.n_components)) for g in self.predictors]
        return replace(self, predictors=preds)


@dataclass(eq=False)
class A0Result:
    component: Component
    criterion_trace: List[float]
    deltas: List[float]
    converged: bool
    backtracks: int = 0

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    def iterations_to(self, tol: float) -> Optional[int]:
        """First iteration whose change fell below ``tol`` (None if never)."""
        for k, d in enumerate(self.deltas, start=1):
            if d < tol:
                return k
        return None

    def is_monotone(self, rtol: float = 1e-12) -> bool:
        t = self.criterion_trace
        return all(b >= a - rtol * max(1.0, abs(a)) for a, b in zip(t, t[1:]))


@dataclass(eq=False)
class ModelComponents:
    """Fitted components of a thematic model and convergence metadata."""

    groups: Dict[str, List[Component]]
    dependent: List[Component] = field(default_factory=list)
    criterion_trace: List[tuple] = field(default_factory=list)
    delta_trace: List[tuple] = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    a0_runs: List[A0Result] = field(default_factory=list)
    criterion_name: str = "C5"

    @property
    def criterion(self) -> float:
        return self.criterion_trace[-1][1] if self.criterion_trace else float("nan")

    def scores(self, group: Optional[str] = None) -> List[NDArray]:
        if group is not None:
            return [c.score for c in self.groups[group]]
        return [c.score for comps in self.groups.values() for c in comps]

    def counts(self) -> Dict[str, int]:
        return {g: len(c) for g, c in self.groups.items()}

    def score_matrix(self) -> NDArray:
        return np.column_stack(self.scores())


def _st(F, w: Weights) -> NDArray:
    return F / np.sqrt(w.norm2(F))


def aligned_delta(F_new, F_old, w: Weights) -> float:
    """P-distance between standardized scores, minimized over sign."""
    a = _st(F_new, w)
    b = _st(F_old, w)
    return float(np.sqrt(min(w.norm2(a - b), w.norm2(a + b))))


def _loading_for(F0, X: NDArray, M: Metric, w: Weights) -> Optional[NDArray]:
    """Unit-M-norm u whose score XMu best fits F0 in the P-norm."""
    sp = np.sqrt(w.p)
    u = np.linalg.lstsq(sp[:, None] * (X @ M.M), sp * F0, rcond=None)[0]
    nu = M.norm2(u)
    if not np.isfinite(nu) or nu <= 0:
        return None
    return u / np.sqrt(nu)


def _start_candidates(ctx, X, M, opts, init, group):
    if init is not None:
        yield np.asarray(init, dtype=float)
    elif opts.init == "column":
        yield X[:, opts.init_column]
    elif opts.init == "given_vector" and opts.init_vectors and group in opts.init_vectors:
        yield np.asarray(opts.init_vectors[group], dtype=float)
    ds = WeightedDataset(X, ctx.w)
    yield triplet_pca(ds, M, 1)[0][0][0]
    yield triplet_pca(ds.with_matrix(ctx.resid(X)), M, 1)[0][0][0]


def _initial_loading(ctx, X, M, opts, init, group):
    w = ctx.w
    for F0 in _start_candidates(ctx, X, M, opts, init, group):
        if w.norm2(F0) <= 0:
            continue
        u = _loading_for(F0, X, M, w)
        if u is None:
            continue
        F = X @ (M.M @ u)
        if w.norm2(F) > 0 and w.norm2(ctx.resid(F)) > 1e-10 * w.norm2(F):
            return u
    raise DegenerateComponent(f"group {group!r}: every candidate start lies in the conditioning span")


def a0(ctx: CriterionContext, X, M: Metric, opts: ConvergenceOptions = ConvergenceOptions(),
       init=None, group: str = "X", rank: int = 1) -> A0Result:
    """Fixed-point maximization of F'PF * F'AF / F'BF over F = XMu, u'Mu = 1.

    Each step freezes beta = F'AF/F'BF and gamma = F'PF/F'BF at the current
    F and takes the top eigenvector of X'(gamma A + beta P - gamma beta B)X M.
    A step that would lower the criterion by more than rounding noise is
    pulled back along the chord to the previous loading.
    """
    w = ctx.w
    X = np.asarray(X, dtype=float)
    Mm = M.M
    Xr = ctx.resid(X)
    XtPX = w.inner(X, X)
    XtBX = w.inner(Xr, Xr)
    XtBY = w.inner(Xr, ctx.Y_resid)
    XtAX = ctx.trace_term * XtBX + XtBY @ ctx.N @ XtBY.T

    def forms(u):
        m = Mm @ u
        return m @ XtPX @ m, m @ XtAX @ m, m @ XtBX @ m

    def crit(u):
        p, a, b = forms(u)
        if b <= 1e-14 * p:
            return -np.inf
        return p * a / b

    u = _initial_loading(ctx, X, M, opts, init, group)
    f = crit(u)
    trace = [f]
    deltas = []
    backtracks = 0
    converged = False
    for _ in range(opts.max_inner):
        p, a, b = forms(u)
        beta, gamma = a / b, p / b
        S = gamma * XtAX + beta * XtPX - gamma * beta * XtBX
        pairs = max_gen_eig(S, M, M.J)
        top = pairs[0].value
        tied = [e.vector for e in pairs if e.value >= top - _DEGENERATE_GAP * max(abs(top), 1e-300)]
        if len(tied) > 1:
            # degenerate top eigenspace: stay as close as possible to the current iterate
            V = np.column_stack(tied)
            cand = V @ (V.T @ Mm @ u)
            nc = M.norm2(cand)
            u_new = cand / np.sqrt(nc) if nc > 1e-20 else tied[0]
        else:
            u_new = pairs[0].vector
        if (Mm @ u_new) @ XtPX @ (Mm @ u) < 0:
            u_new = -u_new
        f_new = crit(u_new)
        if f_new < f - _MONOTONE_RTOL * abs(f):
            t = 1.0
            for _ in range(_MAX_BACKTRACK):
                t *= 0.5
                cand = u + t * (u_new - u)
                cand = cand / np.sqrt(M.norm2(cand))
                fc = crit(cand)
                if fc >= f:
                    u_new, f_new = cand, fc
                    break
            else:
                u_new, f_new = u, f
            backtracks += 1
        F_old = X @ (Mm @ u)
        F_new = X @ (Mm @ u_new)
        d = aligned_delta(F_new, F_old, w)
        u, f = u_new, f_new
        trace.append(f)
        deltas.append(d)
        if d < opts.inner_tol:
            converged = True
            break
    comp = Component(X @ (Mm @ u), u, group, rank, float(f))
    result = A0Result(comp, trace, deltas, converged, backtracks)
    if not converged:
        msg = f"A0 on group {group!r} rank {rank} did not converge in {opts.max_inner} iterations"
        if opts.strict:
            raise NoConvergence(msg, result)
        log.debug(msg)
    return result


def _as_block(Y) -> NDArray:
    Y = Y.X if isinstance(Y, WeightedDataset) else np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def _as_N(N, K: int) -> Metric:
    if N is None:
        return Metric(np.eye(K), "identity")
    if isinstance(N, Metric):
        return N
    return Metric(np.atleast_2d(np.asarray(N, dtype=float)), "custom")


def _initial_scores(g: GroupSpec, count: int, opts: ConvergenceOptions) -> List[NDArray]:
    w = g.data.weights
    if opts.init == "column":
        return [_st(g.X[:, opts.init_column], w)] + [pc[0] for pc in triplet_pca(g.data, g.metric, count)[0][1:]]
    if opts.init == "given_vector" and opts.init_vectors and g.name in opts.init_vectors:
        given = np.asarray(opts.init_vectors[g.name], dtype=float)
        given = given[:, None] if given.ndim == 1 else given
        pcs = triplet_pca(g.data, g.metric, count)[0]
        return [_st(given[:, j], w) if j < given.shape[1] else _st(pcs[j][0], w) for j in range(count)]
    return [_st(pc[0], w) for pc in triplet_pca(g.data, g.metric, count)[0]]


def _finish(mc: ModelComponents, opts: ConvergenceOptions, name: str) -> ModelComponents:
    if not mc.converged:
        msg = f"{name} did not converge in {opts.max_outer} outer iterations"
        if opts.strict:
            raise NoConvergence(msg, mc)
        warnings.warn(msg, NoConvergenceWarning, stacklevel=3)
    return mc


def a2(Y, N, predictors: Sequence[GroupSpec], w: Weights,
       opts: ConvergenceOptions = ConvergenceOptions()) -> ModelComponents:
    """One component per predictor group maximizing C5, one group at a time."""
    Y = _as_block(Y)
    Nm = _as_N(N, Y.shape[1])
    names = [g.name for g in predictors]
    F = {g.name: _initial_scores(g, 1, opts)[0] for g in predictors}
    comps: Dict[str, Component] = {}
    trace = [(0, c5(Y, Nm, list(F.values()), w))]
    deltas = []
    runs = []
    converged = False
    k = 0
    for k in range(1, opts.max_outer + 1):
        old = dict(F)
        for g in predictors:
            Z = [F[s] for s in names if s != g.name]
            ctx = build_context(Y, Nm, Z, w)
            res = a0(ctx, g.X, g.metric, opts, init=F[g.name], group=g.name)
            runs.append(res)
            comps[g.name] = res.component
            F[g.name] = res.component.score
        trace.append((k, c5(Y, Nm, list(F.values()), w)))
        delta = max(aligned_delta(F[s], old[s], w) for s in names)
        deltas.append((k, delta))
        if delta < opts.component_tol:
            converged = True
            break
    mc = ModelComponents({s: [comps[s]] for s in names}, [], trace, deltas, converged, k, runs)
    return _finish(mc, opts, "A2")


def a1(y, predictors: Sequence[GroupSpec], w: Weights,
       opts: ConvergenceOptions = ConvergenceOptions()) -> ModelComponents:
    """Univariate case: one component per group maximizing C4."""
    mc = a2(np.asarray(y, dtype=float)[:, None], np.eye(1), predictors, w, opts)
    mc.criterion_name = "C4"
    return mc


def _deflated(X, own_lower: List[NDArray], w: Weights) -> NDArray:
    if not own_lower:
        return X
    return project(X, np.column_stack(own_lower), w)[1]


def _nested_sweep(model: ThematicModel, Y, Nm, F: Dict[str, List[NDArray]], runs, opts):
    """One outer pass over every (group, rank) with local nesting."""
    w = model.weights
    comps: Dict[str, List[Component]] = {}
    for g in model.predictors:
        comps[g.name] = []
        for j in range(len(F[g.name])):
            own_lower = F[g.name][:j]
            Xdef = _deflated(g.X, own_lower, w)
            Z = [s for h in model.predictors if h.name != g.name for s in F[h.name]]
            if model.control_own_lower:
                Z = Z + own_lower
            ctx = build_context(Y, Nm, Z, w)
            res = a0(ctx, Xdef, g.metric, opts, init=F[g.name][j], group=g.name, rank=j + 1)
            runs.append(res)
            comps[g.name].append(res.component)
            F[g.name][j] = res.component.score
    return comps


def _all_scores(F: Dict[str, List[NDArray]]) -> List[NDArray]:
    return [s for scores in F.values() for s in scores]


def _max_delta(F, old, w) -> float:
    ds = [aligned_delta(a, b, w) for g in F for a, b in zip(F[g], old[g])]
    return max(ds) if ds else 0.0


def a3(model: ThematicModel, init: Optional[Dict[str, List[NDArray]]] = None,
       n_dependent: Optional[int] = None) -> ModelComponents:
    """Several locally nested components per predictor group.

    Component j of group r is sought in X_r deflated on its own components
    of rank < j, conditioned on the full current component sets of all other
    groups.  Dependent components (``model.dependent.n_components`` unless
    overridden) are then computed by redundancy analysis onto every F.
    """
    opts = model.options
    w = model.weights
    Y = model.dependent.X
    Nm = model.dependent.metric
    F: Dict[str, List[NDArray]] = {}
    for g in model.predictors:
        start = _initial_scores(g, g.n_components, opts) if g.n_components else []
        if init and g.name in init:
            given = list(init[g.name])[: g.n_components]
            start = [_st(np.asarray(v, dtype=float), w) for v in given] + start[len(given):]
        F[g.name] = start
    scores = _all_scores(F)
    trace = [(0, c5(Y, Nm, scores, w))] if scores else [(0, 0.0)]
    deltas = []
    runs: List[A0Result] = []
    comps: Dict[str, List[Component]] = {g.name: [] for g in model.predictors}
    converged = not scores
    k = 0
    if scores:
        for k in range(1, opts.max_outer + 1):
            old = {g: list(v) for g, v in F.items()}
            comps = _nested_sweep(model, Y, Nm, F, runs, opts)
            trace.append((k, c5(Y, Nm, _all_scores(F), w)))
            delta = _max_delta(F, old, w)
            deltas.append((k, delta))
            if delta < opts.component_tol:
                converged = True
                break
    mc = ModelComponents(comps, [], trace, deltas, converged, k, runs)
    L = model.dependent.n_components if n_dependent is None else n_dependent
    if L and scores:
        mc.dependent = dependent_components(mc, model.dependent.data, Nm, L, model.dependent.name)
    return _finish(mc, opts, "A3")


def dependent_components(mc: ModelComponents, Y: WeightedDataset, N: Metric, L: int,
                         group: Optional[str] = None) -> List[Component]:
    """G^1..G^L: redundancy analysis of (Y, N, P) onto every retained F."""
    return mra_components(mc.score_matrix(), Y, N, L, group=group or "Y")


def _c5_trace_part(Y, Nm: Metric, basis, w: Weights) -> float:
    if not basis:
        return 0.0
    fitted = project(Y, np.column_stack(basis), w)[0]
    return float(np.trace(Nm.M @ w.inner(fitted, fitted)))


def criterion_ratio(mc: ModelComponents, Y, N, w: Weights, r: str) -> float:
    """C5(M) / C5(SM_r) when the last component of group r is dropped.

    Equals ||F_r^{j_r}||^2 tr(YNY'P Pi_<M>) / tr(YNY'P Pi_<SM_r>); infinite
    when the sub-model is empty.
    """
    Y = _as_block(Y)
    Nm = _as_N(N, Y.shape[1])
    own = mc.groups[r]
    if not own:
        raise ValueError(f"group {r!r} has no component to remove")
    last = own[-1].score
    full = mc.scores()
    sub = [c.score for g, comps in mc.groups.items() for c in (comps[:-1] if g == r else comps)]
    num = _c5_trace_part(Y, Nm, full, w)
    den = _c5_trace_part(Y, Nm, sub, w)
    if den <= 0:
        return float("inf")
    return w.norm2(last) * num / den


def group_omega(g: GroupSpec, omega_kind: str) -> float:
    if omega_kind == "inv_inertia":
        return 1.0 / total_inertia(g.data, g.metric)
    if omega_kind == "inv_lambda1":
        return 1.0 / largest_eigenvalue(g.data, g.metric)
    raise ValueError(f"omega_kind must be one of {OMEGA_KINDS}")


@dataclass(frozen=True)
class SelectionStep:
    step: int
    removed_group: str
    removed_rank: int
    scores: Dict[str, Optional[float]]
    counts: Dict[str, int]
    criterion: float


@dataclass(eq=False)
class SelectionTrace:
    steps: List[SelectionStep]
    final: ModelComponents
    stop_reason: str


def backward_select(model: ThematicModel, mc: Optional[ModelComponents] = None,
                    omega_kind: str = "inv_inertia", target_counts: Optional[Dict[str, int]] = None,
                    min_counts: Optional[Dict[str, int]] = None,
                    threshold: Optional[float] = None) -> SelectionTrace:
    """Backward removal of predictor components.

    Each step removes the last component of the group minimizing
    ``omega_r * C5(M) / C5(SM_r)`` (lowest group index on ties) and refits
    A3 warm-started from the surviving components.  Stops when every group
    is at its minimum count, when ``target_counts`` is reached, or when the
    smallest score reaches ``threshold``.
    """
    w = model.weights
    Y = model.dependent.X
    Nm = model.dependent.metric
    omega = {g.name: group_omega(g, omega_kind) for g in model.predictors}
    minimum = {g.name: 0 for g in model.predictors}
    minimum.update(min_counts or {})
    if mc is None:
        mc = a3(model, n_dependent=0)
    counts = mc.counts()
    steps: List[SelectionStep] = []
    reason = "minimum counts reached"
    while True:
        if target_counts is not None and all(counts[g] <= target_counts.get(g, counts[g]) for g in counts):
            reason = "target counts reached"
            break
        candidates = [g.name for g in model.predictors
                      if counts[g.name] > minimum[g.name]
                      and (target_counts is None or counts[g.name] > target_counts.get(g.name, 0))]
        if not candidates:
            break
        scores: Dict[str, Optional[float]] = {g.name: None for g in model.predictors}
        for name in candidates:
            scores[name] = omega[name] * criterion_ratio(mc, Y, Nm, w, name)
        s = min(candidates, key=lambda name: (scores[name], candidates.index(name)))
        if threshold is not None and scores[s] >= threshold:
            reason = "threshold reached"
            break
        removed_rank = counts[s]
        counts[s] -= 1
        warm = {g: [c.score for c in comps[: counts[g]]] for g, comps in mc.groups.items()}
        mc = a3(model.with_counts(counts), init=warm, n_dependent=0)
        steps.append(SelectionStep(len(steps) + 1, s, removed_rank, scores, dict(counts), mc.criterion))
    return SelectionTrace(steps, mc, reason)


def b1(Y, N, predictors: Sequence[GroupSpec], w: Weights,
       opts: ConvergenceOptions = ConvergenceOptions(), y_group: str = "Y") -> ModelComponents:
    """Co-determination of one component per group and one dependent component (C6)."""
    Yds = Y if isinstance(Y, WeightedDataset) else WeightedDataset(_as_block(Y), w)
    Nm = _as_N(N, Yds.J)
    names = [g.name for g in predictors]
    F = {g.name: _initial_scores(g, 1, opts)[0] for g in predictors}
    G = _st(triplet_pca(Yds, Nm, 1)[0][0][0], w)
    comps: Dict[str, Component] = {}
    G_comp = None
    trace = []
    deltas = []
    runs = []
    converged = False
    k = 0
    for k in range(1, opts.max_outer + 1):
        old = dict(F)
        G_old = G
        for g in predictors:
            Z = [F[s] for s in names if s != g.name]
            ctx = build_context(G, np.eye(1), Z, w)
            res = a0(ctx, g.X, g.metric, opts, init=F[g.name], group=g.name)
            runs.append(res)
            comps[g.name] = res.component
            F[g.name] = res.component.score
        G_comp = mra_components(np.column_stack([F[s] for s in names]), Yds, Nm, 1, group=y_group)[0]
        G = G_comp.score
        trace.append((k, c6(G, [F[s] for s in names], w)))
        delta = max([aligned_delta(F[s], old[s], w) for s in names] + [aligned_delta(G, G_old, w)])
        deltas.append((k, delta))
        if delta < opts.component_tol:
            converged = True
            break
    mc = ModelComponents({s: [comps[s]] for s in names}, [G_comp], trace, deltas, converged, k, runs,
                         criterion_name="C6")
    return _finish(mc, opts, "B1")


G_WEIGHTS = ("identity", "induced")


def _g_metric(G: NDArray, Y: WeightedDataset, N: Metric, kind: str) -> Metric:
    L = G.shape[1]
    if kind == "identity":
        return Metric(np.eye(L), "identity")
    # Y ~ G C: weight the G-set so that G (C N C') G' is the part of YNY' carried by <G>
    C = projection_coefficients(Y.X, G, Y.weights)
    return Metric(C @ N.M @ C.T, "custom")


def b2(model: ThematicModel, start: Optional[ModelComponents] = None,
       max_outer: Optional[int] = None, g_weights: str = "identity") -> ModelComponents:
    """Co-determination with several components per group.

    Starts from A3's predictor components and their redundancy-analysis
    dependent components; each pass refits every F_r^j against the current
    G-set and then refreshes the G's.  ``g_weights`` sets the metric over
    the L scores: ``identity``, or ``induced`` (C N C' with Y ~ G C), under
    which a G-set spanning <Y> reproduces the A3 criterion exactly.
    """
    if g_weights not in G_WEIGHTS:
        raise ValueError(f"g_weights must be one of {G_WEIGHTS}")
    opts = model.options
    w = model.weights
    L = model.dependent.n_components
    if L < 1:
        raise ValueError("B2 needs at least one dependent component")
    Yds = model.dependent.data
    Nm = model.dependent.metric
    if start is None:
        start = a3(model)
    F = {g: [c.score for c in comps] for g, comps in start.groups.items()}
    G_comps = start.dependent or dependent_components(start, Yds, Nm, L, model.dependent.name)
    comps = start.groups
    trace = []
    deltas = []
    runs: List[A0Result] = []
    converged = False
    cap = opts.max_outer if max_outer is None else max_outer
    k = 0
    for k in range(1, cap + 1):
        old = {g: list(v) for g, v in F.items()}
        G_old = [c.score for c in G_comps]
        Gmat = np.column_stack(G_old)
        comps = _nested_sweep(model, Gmat, _g_metric(Gmat, Yds, Nm, g_weights), F, runs, opts)
        G_comps = mra_components(np.column_stack(_all_scores(F)), Yds, Nm, L, group=model.dependent.name)
        G_new = [c.score for c in G_comps]
        Gnew = np.column_stack(G_new)
        trace.append((k, c5(Gnew, _g_metric(Gnew, Yds, Nm, g_weights), _all_scores(F), w)))
        delta = max([_max_delta(F, old, w)] + [aligned_delta(a, b, w) for a, b in zip(G_new, G_old)])
        deltas.append((k, delta))
        if delta < opts.component_tol:
            converged = True
            break
    mc = ModelComponents(comps, list(G_comps), trace, deltas, converged, k, runs)
    if max_outer is not None:
        return mc
    return _finish(mc, opts, "B2")
