"""Command-line front end: ``seer --config model.ini``.

Config grammar (INI)::

    [dataset]
    path = data.csv              # relative to the config file
    weight_column = w            # optional, uniform weights otherwise
    standardize = center_scale   # or center_only

    [group:economy]              # one section per group, in model order
    variables = gdp, jobs, rent
    metric = identity            # inverse_gram | block_inverse | custom
    blocks = gdp jobs; rent      # block_inverse only
    matrix = 1 0 0; 0 1 0; 0 0 2 # custom only
    components = 2

    [model]
    dependent = health           # one of the groups
    algorithm = seer_a3          # pls1 | ln_pls2 | seer_a3 | seer_b1 | seer_b2 | select
    control_own_lower = false
    g_weights = identity         # seer_b2 only: identity | induced

    [options]
    component_tol = 1e-9
    inner_tol = 1e-9
    max_outer = 200
    max_inner = 200
    init = first_pc              # column | given_vector | random
    init_column = 1              # 1-based, for init = column
    init_file = starts.csv       # given_vector: columns named <group> or <group>.F<j>
    strict = false

    [select]
    omega_kind = inv_inertia     # or inv_lambda1
    min_counts = economy:1
    target_counts = economy:1, risk:0
    threshold = 0.5

    [output]
    directory = results          # overridden by $SEER_OUTPUT_DIR, then by --out
    planes = economy:1,2; health:1,2
    all_variables = false
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .criteria import c5
from .errors import ConfigError, MissingVariable, NonNumericCell, SeerError
from .linalg import METRIC_KINDS, WeightedDataset, Weights, make_metric, standardize
from .pls import ln_pls2, pls1
from .report import FitResult, write_all
from .thematic import (G_WEIGHTS, OMEGA_KINDS, ConvergenceOptions, GroupSpec, ModelComponents, ThematicModel,
                       a3, b1, b2, backward_select, dependent_components)

ALGORITHMS = ("pls1", "ln_pls2", "seer_a3", "seer_b1", "seer_b2", "select")
OUTPUT_ENV = "SEER_OUTPUT_DIR"
DEFAULT_OUTPUT = "seer_output"

log = logging.getLogger("seer")


@dataclass(frozen=True)
class GroupConfig:
    name: str
    variables: Tuple[str, ...]
    metric: str = "identity"
    blocks: Tuple[Tuple[str, ...], ...] = ()
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    components: int = 1


@dataclass(frozen=True)
class ModelConfig:
    """Declarative description of a thematic model and how to fit it."""

    dataset: Path
    groups: Tuple[GroupConfig, ...]
    dependent: str
    algorithm: str = "seer_a3"
    weight_column: Optional[str] = None
    standardize: str = "center_scale"
    control_own_lower: bool = False
    g_weights: str = "identity"
    options: Dict[str, object] = field(default_factory=dict)
    init_file: Optional[Path] = None
    omega_kind: str = "inv_inertia"
    min_counts: Dict[str, int] = field(default_factory=dict)
    target_counts: Optional[Dict[str, int]] = None
    threshold: Optional[float] = None
    output: Optional[Path] = None
    planes: Tuple[Tuple[str, int, int], ...] = ()
    all_variables: bool = False

    def __post_init__(self):
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ConfigError("group names must be unique")
        if self.dependent not in names:
            raise ConfigError(f"dependent group {self.dependent!r} is not defined")
        if len(self.groups) < 2:
            raise ConfigError("a model needs a dependent group and at least one predictor group")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r} (choose from {', '.join(ALGORITHMS)})")
        if self.g_weights not in G_WEIGHTS:
            raise ConfigError(f"unknown g_weights {self.g_weights!r} (choose from {', '.join(G_WEIGHTS)})")
        if self.omega_kind not in OMEGA_KINDS:
            raise ConfigError(f"unknown omega_kind {self.omega_kind!r}")
        seen: Dict[str, str] = {}
        for g in self.groups:
            if not g.variables:
                raise ConfigError(f"group {g.name!r} has no variables")
            for v in g.variables:
                if v in seen:
                    raise ConfigError(f"variable {v!r} is assigned to groups {seen[v]!r} and {g.name!r}")
                seen[v] = g.name
            if self.weight_column in g.variables:
                raise ConfigError(f"weight column {self.weight_column!r} is also a variable of {g.name!r}")

    @property
    def predictors(self) -> List[GroupConfig]:
        return [g for g in self.groups if g.name != self.dependent]

    def group(self, name: str) -> GroupConfig:
        for g in self.groups:
            if g.name == name:
                return g
        raise ConfigError(f"unknown group {name!r}")


def _split(text: str) -> List[str]:
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def _counts(text: str, what: str) -> Dict[str, int]:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        name, sep, value = item.partition(":")
        if not sep:
            raise ConfigError(f"{what}: expected group:count, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"{what}: count for {name.strip()!r} is not an integer") from None
    return out


def parse_plane(text: str) -> Tuple[str, int, int]:
    """``group:j,j'`` with 1-based component ranks."""
    m = re.fullmatch(r"\s*([^:]+):\s*(\d+)\s*,\s*(\d+)\s*", text)
    if not m:
        raise ConfigError(f"plane {text!r} must look like group:j,j'")
    return m.group(1).strip(), int(m.group(2)), int(m.group(3))


def _bool(section, key, default=False) -> bool:
    try:
        return section.getboolean(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be true or false") from None


def _number(section, key, kind):
    raw = section.get(key)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def _group_section(name: str, sec) -> GroupConfig:
    metric = sec.get("metric", "identity").strip()
    if metric not in METRIC_KINDS:
        raise ConfigError(f"group {name!r}: unknown metric {metric!r}")
    blocks = tuple(tuple(_split(b)) for b in sec.get("blocks", "").split(";") if b.strip())
    if metric == "block_inverse" and not blocks:
        raise ConfigError(f"group {name!r}: block_inverse needs 'blocks'")
    matrix = None
    if metric == "custom":
        if "matrix" not in sec:
            raise ConfigError(f"group {name!r}: custom metric needs 'matrix'")
        try:
            matrix = tuple(tuple(float(x) for x in _split(row)) for row in sec["matrix"].split(";") if row.strip())
        except ValueError:
            raise ConfigError(f"group {name!r}: metric matrix has a non-numeric entry") from None
    components = _number(sec, "components", int) if "components" in sec else 1
    return GroupConfig(name, tuple(_split(sec.get("variables", ""))), metric, blocks, matrix, components)


def load_config(path) -> ModelConfig:
    """Parse an INI model description; relative paths resolve against its folder."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    if "dataset" not in parser or "path" not in parser["dataset"]:
        raise ConfigError(f"{path}: missing [dataset] path")
    if "model" not in parser or "dependent" not in parser["model"]:
        raise ConfigError(f"{path}: missing [model] dependent")
    ds = parser["dataset"]
    model = parser["model"]
    groups = tuple(_group_section(s.split(":", 1)[1].strip(), parser[s])
                   for s in parser.sections() if s.startswith("group:"))

    options: Dict[str, object] = {}
    init_file = None
    if "options" in parser:
        sec = parser["options"]
        for key, kind in (("component_tol", float), ("inner_tol", float), ("max_outer", int), ("max_inner", int)):
            if key in sec:
                options[key] = _number(sec, key, kind)
        if "init" in sec:
            options["init"] = sec["init"].strip()
        if "init_column" in sec:
            options["init_column"] = _number(sec, "init_column", int) - 1
        if "strict" in sec:
            options["strict"] = _bool(sec, "strict")
        if "init_file" in sec:
            init_file = base / sec["init_file"].strip()

    select = parser["select"] if "select" in parser else {}
    out = parser["output"] if "output" in parser else None
    planes = ()
    if out is not None and out.get("planes", "").strip():
        planes = tuple(parse_plane(p) for p in out["planes"].split(";") if p.strip())

    threshold = None
    if select and "threshold" in select:
        threshold = _number(select, "threshold", float)
    return ModelConfig(
        dataset=base / ds["path"].strip(),
        groups=groups,
        dependent=model["dependent"].strip(),
        algorithm=model.get("algorithm", "seer_a3").strip(),
        weight_column=(ds.get("weight_column") or "").strip() or None,
        standardize=ds.get("standardize", "center_scale").strip(),
        control_own_lower=_bool(model, "control_own_lower"),
        g_weights=model.get("g_weights", "identity").strip(),
        options=options,
        init_file=init_file,
        omega_kind=(select.get("omega_kind", "inv_inertia") if select else "inv_inertia").strip(),
        min_counts=_counts(select.get("min_counts", ""), "min_counts") if select else {},
        target_counts=_counts(select["target_counts"], "target_counts")
        if select and "target_counts" in select else None,
        threshold=threshold,
        output=base / out["directory"].strip() if out is not None and "directory" in out else None,
        planes=planes,
        all_variables=_bool(out, "all_variables") if out is not None else False,
    )


@dataclass(frozen=True)
class Ingested:
    datasets: Dict[str, WeightedDataset]
    weights: Weights
    observation_ids: List[str]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise ConfigError(f"{path}: line {line} has {len(r)} fields, header has {len(header)}")
    return header, rows[1:]


def _column(header, rows, name: str) -> np.ndarray:
    if name not in header:
        raise MissingVariable(name)
    if header.count(name) > 1:
        raise ConfigError(f"column {name!r} appears more than once in the dataset header")
    j = header.index(name)
    out = np.empty(len(rows))
    for i, r in enumerate(rows):
        cell = r[j].strip()
        try:
            out[i] = float(cell)
        except ValueError:
            raise NonNumericCell(i + 2, name, cell) from None
        if not np.isfinite(out[i]):
            raise NonNumericCell(i + 2, name, cell)
    return out


def ingest(config: ModelConfig) -> Ingested:
    """Read the CSV, build shared weights and one standardized dataset per group.

    Rows in errors are file line numbers (the header is line 1).
    """
    header, rows = _read_csv(config.dataset)
    if len(rows) < 2:
        raise ConfigError(f"{config.dataset}: at least two observations are required")
    if config.weight_column:
        raw = _column(header, rows, config.weight_column)
        bad = np.flatnonzero(raw <= 0)
        if bad.size:
            raise ConfigError(f"weight column {config.weight_column!r}: non-positive weight "
                              f"at line {int(bad[0]) + 2}")
        weights = Weights.normalized(raw)
    else:
        weights = Weights.uniform(len(rows))
    first = [r[0].strip() for r in rows]
    if not all(_is_number(x) for x in first):
        ids = first
    else:
        ids = [str(i) for i in range(1, len(rows) + 1)]
    datasets = {}
    for g in config.groups:
        raw = np.column_stack([_column(header, rows, v) for v in g.variables])
        datasets[g.name] = standardize(raw, weights, config.standardize, g.variables)
    return Ingested(datasets, weights, ids)


def _metric(g: GroupConfig, ds: WeightedDataset):
    blocks = None
    if g.metric == "block_inverse":
        index = {v: j for j, v in enumerate(g.variables)}
        try:
            blocks = [[index[v] for v in b] for b in g.blocks]
        except KeyError as exc:
            raise ConfigError(f"group {g.name!r}: block variable {exc.args[0]!r} is not in the group") from None
    try:
        return make_metric(g.metric, ds, blocks=blocks, matrix=g.matrix)
    except ValueError as exc:
        raise ConfigError(f"group {g.name!r}: {exc}") from None


def _init_vectors(config: ModelConfig, data: Ingested, seed: int) -> Optional[Dict[str, np.ndarray]]:
    init = config.options.get("init", "first_pc")
    if init == "random":
        rng = np.random.default_rng(seed)
        return {g.name: data.datasets[g.name].X @ rng.standard_normal((len(g.variables), max(g.components, 1)))
                for g in config.predictors}
    if init != "given_vector":
        return None
    if config.init_file is None:
        raise ConfigError("init = given_vector needs [options] init_file")
    header, rows = _read_csv(config.init_file)
    if len(rows) != data.weights.n:
        raise ConfigError(f"{config.init_file}: {len(rows)} rows, dataset has {data.weights.n}")
    vectors = {}
    for g in config.predictors:
        cols = []
        for j in range(1, g.components + 1):
            name = g.name if j == 1 and g.name in header else f"{g.name}.F{j}"
            if name not in header:
                break
            cols.append(_column(header, rows, name))
        if cols:
            vectors[g.name] = np.column_stack(cols)
    return vectors


def build_model(config: ModelConfig, data: Ingested, seed: int = 0) -> ThematicModel:
    opts = dict(config.options)
    vectors = _init_vectors(config, data, seed)
    if opts.get("init") == "random":
        opts["init"] = "given_vector"
    if vectors is not None:
        opts["init_vectors"] = vectors
    try:
        options = ConvergenceOptions(**opts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def spec(g: GroupConfig) -> GroupSpec:
        ds = data.datasets[g.name]
        return GroupSpec(g.name, ds, _metric(g, ds), g.components)

    try:
        return ThematicModel(spec(config.group(config.dependent)), [spec(g) for g in config.predictors],
                             options, config.control_own_lower)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _single_predictor(model: ThematicModel, algorithm: str) -> GroupSpec:
    if len(model.predictors) != 1:
        raise ConfigError(f"{algorithm} needs exactly one predictor group, got {len(model.predictors)}")
    return model.predictors[0]


def fit(config: ModelConfig, data: Ingested, seed: int = 0) -> FitResult:
    """Dispatch to the configured algorithm and wrap the result."""
    model = build_model(config, data, seed)
    w = data.weights
    Y = model.dependent
    selection = None
    algo = config.algorithm
    if algo == "pls1":
        X = _single_predictor(model, algo)
        if Y.data.J != 1:
            raise ConfigError(f"pls1 needs a single dependent variable, group {Y.name!r} has {Y.data.J}")
        comps = pls1(X.data, X.metric, Y.X[:, 0], X.n_components, group=X.name)
        mc = ModelComponents({X.name: comps}, [], [(0, c5(Y.X, Y.metric, [c.score for c in comps], w))],
                             criterion_name="C4")
    elif algo == "ln_pls2":
        X = _single_predictor(model, algo)
        F, G = ln_pls2(X.data, X.metric, Y.data, Y.metric, X.n_components, Y.n_components, X.name, Y.name)
        mc = ModelComponents({X.name: F}, G, [(0, c5(Y.X, Y.metric, [c.score for c in F], w))])
    elif algo == "seer_a3":
        mc = a3(model)
    elif algo == "seer_b1":
        bad = [g.name for g in model.predictors if g.n_components != 1]
        if bad or Y.n_components != 1:
            raise ConfigError("seer_b1 fits exactly one component per group (check 'components')")
        mc = b1(Y.data, Y.metric, model.predictors, w, model.options, y_group=Y.name)
    elif algo == "seer_b2":
        mc = b2(model, g_weights=config.g_weights)
    else:
        selection = backward_select(model, omega_kind=config.omega_kind, target_counts=config.target_counts,
                                    min_counts=config.min_counts, threshold=config.threshold)
        mc = selection.final
        if Y.n_components and mc.scores():
            mc.dependent = dependent_components(mc, Y.data, Y.metric, Y.n_components, Y.name)
    return FitResult(algo, mc, data.datasets, config.dependent, data.observation_ids, w, seed,
                     selection, dependent_metric=Y.metric.M)


def output_directory(config: ModelConfig, override: Optional[str] = None) -> Path:
    if override:
        return Path(override)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return config.output or Path(DEFAULT_OUTPUT)


def run(config: ModelConfig, out: Path, seed: int = 0,
        planes: Sequence[Tuple[str, int, int]] = (), all_variables: bool = False) -> FitResult:
    data = ingest(config)
    result = fit(config, data, seed)
    write_all(result, out, list(config.planes) + list(planes), all_variables or config.all_variables)
    return result


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seer", description="Fit a thematic component model from a CSV file.")
    ap.add_argument("--config", required=True, help="INI model description")
    ap.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    ap.add_argument("--seed", type=int, default=0, help="seed for init = random (default 0)")
    ap.add_argument("--planes", action="append", default=[], metavar="GROUP:J,J'",
                    help="export a component plane; repeatable")
    ap.add_argument("--algorithm", choices=ALGORITHMS, help="override [model] algorithm")
    ap.add_argument("--all-variables", action="store_true",
                    help="correlate every variable, not only the group's own, on exported planes")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="seer: %(levelname)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.algorithm:
            config = ModelConfig(**{**config.__dict__, "algorithm": args.algorithm})
        planes = [parse_plane(p) for p in args.planes]
        out = output_directory(config, args.out)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            logging.captureWarnings(True)
            result = run(config, out, args.seed, planes, args.all_variables)
    except (SeerError, ValueError, OSError) as exc:
        print(f"seer: error: {exc}", file=sys.stderr)
        return 1
    status = "converged" if result.model.converged else "NOT converged"
    print(f"{result.algorithm}: {result.model.criterion_name} = {result.model.criterion:.6g} "
          f"({status}); results in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
