"""Fit results, tables and file export.

Human-readable tables use 3 decimals.  Machine files use ``%.17g`` so that
reloading reproduces every number bit-for-bit.  Every file is tab-separated
with a fixed header; see :data:`MACHINE_HEADERS`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .criteria import beta_gamma, build_context, pseudo_pvalues, r_squared, stars
from .errors import DegenerateComponent, InsufficientDof, SingularBasis, UnknownComponent
from .linalg import WeightedDataset, Weights
from .pls import Component
from .thematic import ModelComponents, SelectionTrace

MACHINE_HEADERS = {
    "scores.tsv": ["observation"],  # followed by one column per component label
    "loadings.tsv": ["component", "group", "rank", "variable", "loading"],
    "components_meta.tsv": ["component", "group", "rank", "role", "value", "strength", "beta", "gamma"],
    "regression.tsv": ["response", "regressor", "coefficient", "std_error", "t_value", "p_value",
                       "r2", "dof"],
    "summary.tsv": ["key", "value"],
}


def fmt_full(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NA"
    return format(x, ".17g")


def fmt3(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NA"
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def component_label(comp: Component, dependent: bool = False) -> str:
    return f"{comp.group}.{'G' if dependent else 'F'}{comp.rank}"


def weighted_corr(a, b, w: Weights) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a - w.p @ a
    b = b - w.p @ b
    den = math.sqrt(w.norm2(a) * w.norm2(b))
    if den == 0:
        return float("nan")
    return float(np.clip(w.inner(a, b) / den, -1.0, 1.0))


@dataclass(frozen=True)
class RegressionRow:
    response: str
    r2: float
    dof: int
    cells: Tuple[Tuple[str, float, float, float, float], ...]  # label, coef, se, t, p


@dataclass(frozen=True)
class ComponentDiagnostics:
    label: str
    component: Component
    role: str
    strength: float
    beta: float
    gamma: float


@dataclass(eq=False)
class FitResult:
    """Everything a fit produces, ready for export."""

    algorithm: str
    model: ModelComponents
    datasets: Dict[str, WeightedDataset]
    dependent: str
    observation_ids: List[str]
    weights: Weights
    seed: Optional[int] = None
    selection: Optional[SelectionTrace] = None
    extra: Dict[str, str] = field(default_factory=dict)
    dependent_metric: Optional[NDArray] = None  # identity when absent

    def __post_init__(self):
        if self.dependent_metric is None:
            self.dependent_metric = np.eye(self.datasets[self.dependent].J)

    def predictor_components(self) -> List[Tuple[str, Component]]:
        return [(component_label(c), c) for comps in self.model.groups.values() for c in comps]

    def dependent_components(self) -> List[Tuple[str, Component]]:
        return [(component_label(c, dependent=True), c) for c in self.model.dependent]

    def all_components(self) -> List[Tuple[str, Component]]:
        return self.predictor_components() + self.dependent_components()

    def group_components(self, group: str) -> List[Component]:
        if group in self.model.groups:
            return self.model.groups[group]
        if group == self.dependent:
            return self.model.dependent
        raise UnknownComponent(f"unknown group {group!r}")

    def regression(self) -> List[RegressionRow]:
        """Each dependent variable and each G regressed on every predictor component."""
        preds = self.predictor_components()
        Y = self.datasets[self.dependent]
        responses = [(name, Y.X[:, k]) for k, name in enumerate(Y.column_names)]
        responses += [(label, c.score) for label, c in self.dependent_components()]
        regressors = [c.score for _, c in preds]
        rows = []
        for name, y in responses:
            if not regressors:
                rows.append(RegressionRow(name, 0.0, self.weights.n - 1, ()))
                continue
            r2 = r_squared(y - self.weights.p @ y, [z - self.weights.p @ z for z in regressors],
                           self.weights)
            try:
                summary = pseudo_pvalues(y, regressors, self.weights, standardized=True)
                cells = tuple((label, *vals) for (label, _), vals in zip(preds, zip(
                    summary.coefficients, summary.std_errors, summary.t_values, summary.p_values)))
                dof = summary.dof
            except InsufficientDof:
                nan = float("nan")
                cells = tuple((label, nan, nan, nan, nan) for label, _ in preds)
                dof = self.weights.n - len(preds) - 1
            rows.append(RegressionRow(name, r2, dof, cells))
        return rows

    def diagnostics(self) -> List[ComponentDiagnostics]:
        """Structural strength, and beta/gamma of each F given all the others."""
        w = self.weights
        Y = self.datasets[self.dependent]
        N = self.dependent_metric
        preds = self.predictor_components()
        out = []
        for i, (label, c) in enumerate(preds):
            others = [o.score for j, (_, o) in enumerate(preds) if j != i]
            try:
                bg = beta_gamma(c.score, build_context(Y.X, N, others, w))
                beta, gamma = bg.beta, bg.gamma
            except (DegenerateComponent, SingularBasis):
                beta = gamma = float("nan")
            out.append(ComponentDiagnostics(label, c, "predictor", w.norm2(c.score), beta, gamma))
        for label, c in self.dependent_components():
            nan = float("nan")
            out.append(ComponentDiagnostics(label, c, "dependent", w.norm2(c.score), nan, nan))
        return out


def _writer(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, delimiter="\t", lineterminator="\n")


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    fh, wr = _writer(path)
    with fh:
        wr.writerow(header)
        wr.writerows(rows)


def write_components_table(fit: FitResult, path: Path) -> None:
    rows = []
    for label, c in fit.all_components():
        names = fit.datasets[c.group].column_names
        for var, u in zip(names, c.loading):
            rows.append([label, c.group, c.rank, fmt3(c.eigenvalue),
                         fmt3(fit.weights.norm2(c.score)), var, fmt3(u)])
    _write_rows(path, ["component", "group", "rank", "value", "strength", "variable", "loading"], rows)


def write_fit_table(fit: FitResult, path: Path) -> None:
    """R2 and significant standardized coefficients, one row per response."""
    labels = [label for label, _ in fit.predictor_components()]
    rows = []
    for row in fit.regression():
        cells = []
        for _, coef, _, _, p in row.cells:
            cells.append(f"{fmt3(coef)} {stars(p)}" if p < 0.05 else "")
        rows.append([row.response, fmt3(row.r2), *cells])
    _write_rows(path, ["response", "R2", *labels], rows)


def write_convergence_log(fit: FitResult, path: Path) -> None:
    deltas = dict(fit.model.delta_trace)
    rows = [[k, fmt_full(v), fmt_full(deltas[k]) if k in deltas else "NA"]
            for k, v in fit.model.criterion_trace]
    _write_rows(path, ["iteration", "criterion", "max_delta"], rows)


def write_selection(trace: SelectionTrace, groups: Sequence[str], path: Path) -> None:
    rows = []
    for s in trace.steps:
        scores = [fmt_full(s.scores[g]) if s.scores.get(g) is not None else "NA" for g in groups]
        rows.append([s.step, s.removed_group, s.removed_rank, *scores, fmt_full(s.criterion)])
    _write_rows(path, ["step", "removed_group", "removed_rank", *[f"score_{g}" for g in groups],
                       "criterion"], rows)


def summary_items(fit: FitResult) -> List[Tuple[str, str]]:
    m = fit.model
    items = [
        ("algorithm", fit.algorithm),
        ("criterion_name", m.criterion_name),
        ("criterion", fmt_full(m.criterion)),
        ("converged", "true" if m.converged else "false"),
        ("outer_iterations", str(m.iterations)),
        ("a0_runs", str(len(m.a0_runs))),
        ("n_observations", str(fit.weights.n)),
        ("dependent", fit.dependent),
        ("predictor_groups", ",".join(m.groups)),
        ("counts", ",".join(f"{g}:{k}" for g, k in m.counts().items())),
        ("seed", "NA" if fit.seed is None else str(fit.seed)),
    ]
    if fit.selection is not None:
        items.append(("selection_stop", fit.selection.stop_reason))
    items.extend(sorted(fit.extra.items()))
    return items


def write_machine_files(fit: FitResult, directory: Path) -> None:
    comps = fit.all_components()
    labels = [label for label, _ in comps]
    score_rows = [[obs, *(fmt_full(c.score[i]) for _, c in comps)]
                  for i, obs in enumerate(fit.observation_ids)]
    _write_rows(directory / "scores.tsv", ["observation", *labels], score_rows)

    loading_rows = []
    for label, c in comps:
        for var, u in zip(fit.datasets[c.group].column_names, c.loading):
            loading_rows.append([label, c.group, c.rank, var, fmt_full(u)])
    _write_rows(directory / "loadings.tsv", MACHINE_HEADERS["loadings.tsv"], loading_rows)

    meta = [[d.label, d.component.group, d.component.rank, d.role, fmt_full(d.component.eigenvalue),
             fmt_full(d.strength), fmt_full(d.beta), fmt_full(d.gamma)] for d in fit.diagnostics()]
    _write_rows(directory / "components_meta.tsv", MACHINE_HEADERS["components_meta.tsv"], meta)

    reg = []
    for row in fit.regression():
        for label, coef, se, t, p in row.cells:
            reg.append([row.response, label, fmt_full(coef), fmt_full(se), fmt_full(t), fmt_full(p),
                        fmt_full(row.r2), row.dof])
    _write_rows(directory / "regression.tsv", MACHINE_HEADERS["regression.tsv"], reg)
    _write_rows(directory / "summary.tsv", MACHINE_HEADERS["summary.tsv"], summary_items(fit))


@dataclass(frozen=True)
class PlaneExport:
    """Coordinates of one thematic plane (no rendering)."""

    group: str
    pair: Tuple[int, int]
    variables: List[Tuple[str, str, float, float]]   # (source group, variable, corr j, corr j')
    observations: List[Tuple[str, float, float]]     # (id, standardized score j, score j')

    @property
    def filename(self) -> str:
        return f"plane_{self.group}_{self.pair[0]}_{self.pair[1]}.tsv"

    def write(self, directory: Path) -> Path:
        rows = [["variable", g, v, fmt_full(x), fmt_full(y)] for g, v, x, y in self.variables]
        rows += [["observation", "", o, fmt_full(x), fmt_full(y)] for o, x, y in self.observations]
        path = directory / self.filename
        _write_rows(path, ["kind", "source_group", "label", "x", "y"], rows)
        return path


def export_plane(fit: FitResult, group: str, pair: Tuple[int, int],
                 all_variables: bool = False) -> PlaneExport:
    """Variable correlations and standardized observation scores on (F^j, F^j')."""
    comps = fit.group_components(group)
    j, k = pair
    if j == k:
        raise UnknownComponent(f"plane {group}:{j},{k} needs two distinct components")
    for r in (j, k):
        if not 1 <= r <= len(comps):
            raise UnknownComponent(f"group {group!r} has no component of rank {r} "
                                   f"({len(comps)} extracted)")
    w = fit.weights
    Fa, Fb = comps[j - 1].score, comps[k - 1].score
    sources = list(fit.datasets) if all_variables else [group]
    variables = []
    for g in sources:
        ds = fit.datasets[g]
        for name, col in zip(ds.column_names, ds.X.T):
            variables.append((g, name, weighted_corr(col, Fa, w), weighted_corr(col, Fb, w)))
    sa = (Fa - w.p @ Fa) / math.sqrt(w.norm2(Fa - w.p @ Fa))
    sb = (Fb - w.p @ Fb) / math.sqrt(w.norm2(Fb - w.p @ Fb))
    obs = [(o, float(x), float(y)) for o, x, y in zip(fit.observation_ids, sa, sb)]
    return PlaneExport(group, (j, k), variables, obs)


def write_all(fit: FitResult, directory: Path, planes: Sequence[Tuple[str, int, int]] = (),
              all_variables: bool = False) -> List[Path]:
    """Write every output file in a fixed order and return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    exports = [export_plane(fit, g, (j, k), all_variables) for g, j, k in planes]
    write_components_table(fit, directory / "components.tsv")
    write_fit_table(fit, directory / "fit_table.tsv")
    write_convergence_log(fit, directory / "convergence.log")
    write_machine_files(fit, directory)
    if fit.selection is not None:
        write_selection(fit.selection, list(fit.model.groups), directory / "selection.tsv")
    for e in exports:
        e.write(directory)
    return sorted(directory.iterdir())


@dataclass(frozen=True)
class LoadedResult:
    observation_ids: List[str]
    labels: List[str]
    scores: NDArray
    loadings: Dict[str, Dict[str, float]]
    summary: Dict[str, str]

    def score(self, label: str) -> NDArray:
        return self.scores[:, self.labels.index(label)]


def _read_rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    return rows[0], rows[1:]


def load_result(directory) -> LoadedResult:
    """Reload the machine-readable files written by :func:`write_all`."""
    directory = Path(directory)
    header, rows = _read_rows(directory / "scores.tsv")
    ids = [r[0] for r in rows]
    scores = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(len(rows), len(header) - 1)
    _, lrows = _read_rows(directory / "loadings.tsv")
    loadings: Dict[str, Dict[str, float]] = {}
    for label, _, _, var, val in lrows:
        loadings.setdefault(label, {})[var] = float(val)
    _, srows = _read_rows(directory / "summary.tsv")
    return LoadedResult(ids, header[1:], scores, loadings, dict(srows))
