import csv
import filecmp

import numpy as np
import pytest

from helpers import W4, X1, X2, Z, corr, e2, planted_noise_instance
from seer import ConfigError, Metric, UnknownComponent, WeightedDataset, export_plane, load_result, pls1
from seer.cli import OUTPUT_ENV, fit, ingest, load_config, main, parse_plane
from seer.report import fmt3

SQ2 = np.sqrt(2.0)


def write_case(tmp_path, columns, groups, model, ids=None, extra="", dataset_extra=""):
    """Write data.csv and model.ini under tmp_path and return the ini path."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(tmp_path / "data.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow((["id"] if ids else []) + names)
        for i in range(n):
            wr.writerow(([ids[i]] if ids else []) + [format(float(columns[c][i]), ".17g") for c in names])
    lines = ["[dataset]", "path = data.csv", dataset_extra, ""]
    for name, spec in groups.items():
        variables, count = spec if isinstance(spec, tuple) else (spec, 1)
        lines += [f"[group:{name}]", f"variables = {', '.join(variables)}", f"components = {count}", ""]
    lines += ["[model]"] + [f"{k} = {v}" for k, v in model.items()] + ["", extra]
    path = tmp_path / "model.ini"
    path.write_text("\n".join(lines) + "\n")
    return path


def e1_case(tmp_path, algorithm="pls1", **kw):
    cols = {"x1": X1, "x2": X2, "y": (X1 + X2) / SQ2}
    return write_case(tmp_path, cols, {"X": ["x1", "x2"], "Y": ["y"]},
                      {"dependent": "Y", "algorithm": algorithm}, ids=list("abcd"), **kw)


def e2_case(tmp_path, algorithm):
    x1, x2, z, Y, w = e2()
    cols = {"x1": x1, "x2": x2, "y1": Y[:, 0], "y2": Y[:, 1], "y3": Y[:, 2]}
    return write_case(tmp_path, cols, {"X": ["x1", "x2"], "Y": ["y1", "y2", "y3"]},
                      {"dependent": "Y", "algorithm": algorithm}, ids=list("abcd"))


def plane_case(tmp_path):
    cols = {"x1": X1, "x2": X2, "y1": 2 * (X1 + X2) / SQ2, "y2": (X1 - X2) / SQ2}
    return write_case(tmp_path, cols, {"X": (["x1", "x2"], 2), "Y": (["y1", "y2"], 1)},
                      {"dependent": "Y", "algorithm": "ln_pls2"}, ids=list("abcd"),
                      dataset_extra="standardize = center_only")


def read_tsv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh, delimiter="\t"))


# ---- ingestion ------------------------------------------------------------

def test_ingest_e1_gram_identity(tmp_path):
    config = load_config(e1_case(tmp_path))
    data = ingest(config)
    X = data.datasets["X"]
    np.testing.assert_allclose(data.weights.inner(X.X, X.X), np.eye(2), atol=1e-15)
    assert data.weights.p.sum() == pytest.approx(1.0)
    assert data.observation_ids == list("abcd")


def test_numeric_first_column_gives_row_ids(tmp_path):
    path = write_case(tmp_path, {"x1": X1, "x2": X2, "y": X1 + Z}, {"X": ["x1", "x2"], "Y": ["y"]},
                      {"dependent": "Y"})
    assert ingest(load_config(path)).observation_ids == ["1", "2", "3", "4"]


def test_zero_weight_rejected(tmp_path, capsys):
    cols = {"x1": X1, "x2": X2, "y": X1 + Z, "w": [1, 0, 1, 1]}
    path = write_case(tmp_path, cols, {"X": ["x1", "x2"], "Y": ["y"]}, {"dependent": "Y"},
                      dataset_extra="weight_column = w")
    assert main(["--config", str(path), "--out", str(tmp_path / "out")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("seer: error:") and "'w'" in err and "line 3" in err


def test_weights_are_normalized(tmp_path):
    cols = {"x1": X1, "x2": X2, "y": X1 + Z, "w": [1, 2, 3, 4]}
    path = write_case(tmp_path, cols, {"X": ["x1", "x2"], "Y": ["y"]}, {"dependent": "Y"},
                      dataset_extra="weight_column = w")
    np.testing.assert_allclose(ingest(load_config(path)).weights.p, [0.1, 0.2, 0.3, 0.4])


def test_duplicate_variable_is_config_error(tmp_path):
    path = write_case(tmp_path, {"x1": X1, "y": X2}, {"X": ["x1"], "Y": ["y", "x1"]}, {"dependent": "Y"})
    with pytest.raises(ConfigError, match="'x1'"):
        load_config(path)


def test_missing_variable_exit_status(tmp_path, capsys):
    path = write_case(tmp_path, {"x1": X1, "y": X2}, {"X": ["x1", "gone"], "Y": ["y"]}, {"dependent": "Y"})
    assert main(["--config", str(path), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "gone" in err and err.count("\n") == 1


def test_non_numeric_cell_located(tmp_path, capsys):
    path = e1_case(tmp_path)
    text = (tmp_path / "data.csv").read_text().splitlines()
    fields = text[2].split(",")
    fields[2] = "n/a"
    text[2] = ",".join(fields)
    (tmp_path / "data.csv").write_text("\n".join(text) + "\n")
    assert main(["--config", str(path), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "x2" in err and "3" in err and "n/a" in err


def test_config_errors(tmp_path, capsys):
    path = e1_case(tmp_path)
    bad = path.read_text().replace("algorithm = pls1", "algorithm = pls1\ng_weights = bogus")
    path.write_text(bad)
    assert main(["--config", str(path)]) == 1
    assert "g_weights" in capsys.readouterr().err
    path.write_text(bad.replace("dependent = Y", "dependent = Nope"))
    assert main(["--config", str(path)]) == 1
    assert "Nope" in capsys.readouterr().err


def test_parse_plane():
    assert parse_plane(" econ:1,2 ") == ("econ", 1, 2)
    with pytest.raises(ConfigError):
        parse_plane("econ:1")


# ---- fitting and files ----------------------------------------------------

def test_pls1_components_table_matches_library(tmp_path, capsys):
    path = e1_case(tmp_path)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out)]) == 0
    assert capsys.readouterr().out.count("\n") == 1
    ds = WeightedDataset(np.column_stack([X1, X2]), W4, ("x1", "x2"))
    comp = pls1(ds, Metric(np.eye(2)), (X1 + X2) / SQ2, 1, group="X")[0]
    expected = [["component", "group", "rank", "value", "strength", "variable", "loading"]]
    expected += [["X.F1", "X", "1", fmt3(comp.eigenvalue), fmt3(W4.norm2(comp.score)), v, fmt3(u)]
                 for v, u in zip(("x1", "x2"), comp.loading)]
    assert read_tsv(out / "components.tsv") == expected
    assert expected[1][3:] == ["1.000", "1.000", "x1", "0.707"]


def test_fit_table_layout(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(plane_case(tmp_path)), "--out", str(out)]) == 0
    rows = read_tsv(out / "fit_table.tsv")
    assert rows[0] == ["response", "R2", "X.F1", "X.F2"]
    assert [r[0] for r in rows[1:]] == ["y1", "y2", "Y.G1"]
    # exact fits: the matching component gets p = 0, the orthogonal one an undefined t (blank cell)
    assert rows[1:] == [["y1", "1.000", "1.000 ***", ""], ["y2", "1.000", "", "1.000 ***"],
                        ["Y.G1", "1.000", "1.000 ***", ""]]


def test_convergence_log_and_summary(tmp_path):
    out = tmp_path / "out"
    path = write_case(tmp_path, {"x1": X1, "x2": X2, "z": Z, "y": X1 + 0.5 * X2 + 0.2 * Z},
                      {"X": ["x1", "x2"], "Zg": ["z"], "Y": ["y"]}, {"dependent": "Y", "algorithm": "seer_a3"})
    assert main(["--config", str(path), "--out", str(out)]) == 0
    log = read_tsv(out / "convergence.log")
    assert log[0] == ["iteration", "criterion", "max_delta"]
    assert log[1][2] == "NA"
    values = [float(r[1]) for r in log[1:]]
    assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))
    summary = dict(read_tsv(out / "summary.tsv")[1:])
    assert summary["algorithm"] == "seer_a3" and summary["converged"] == "true"
    assert summary["counts"] == "X:1,Zg:1"


@pytest.mark.parametrize("algorithm,target", [("seer_a3", 0), ("seer_b1", 1)])
def test_e2_a3_versus_b1(tmp_path, algorithm, target):
    out = tmp_path / "out"
    assert main(["--config", str(e2_case(tmp_path, algorithm)), "--out", str(out)]) == 0
    F = load_result(out).score("X.F1")
    assert abs(corr(F, (X1, X2)[target], W4.p)) > 0.99


def test_e2_b2_keeps_a3_start(tmp_path):
    # x1 is a fixed point of the B2 alternation, so starting from A3 it stays there
    out = tmp_path / "out"
    assert main(["--config", str(e2_case(tmp_path, "seer_b2")), "--out", str(out)]) == 0
    assert abs(corr(load_result(out).score("X.F1"), X1, W4.p)) > 0.99


def test_algorithm_flag_overrides_config(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(e2_case(tmp_path, "seer_a3")), "--algorithm", "seer_b1",
                 "--out", str(out)]) == 0
    assert load_result(out).summary["algorithm"] == "seer_b1"


def test_pls1_requires_single_predictor(tmp_path, capsys):
    path = write_case(tmp_path, {"x1": X1, "x2": X2, "y": X1 + X2},
                      {"A": ["x1"], "B": ["x2"], "Y": ["y"]}, {"dependent": "Y", "algorithm": "pls1"})
    assert main(["--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "one predictor group" in capsys.readouterr().err


def _random_case(tmp_path, extra=""):
    rng = np.random.default_rng(3)
    n = 30
    cols = {f"a{j}": rng.normal(size=n) for j in range(3)}
    cols.update({f"b{j}": rng.normal(size=n) for j in range(3)})
    cols.update({"y1": cols["a0"] + cols["b1"] + rng.normal(size=n), "y2": cols["a1"] - cols["b0"]})
    cols["w"] = rng.uniform(0.5, 2.0, n)
    return write_case(tmp_path, cols, {"A": (["a0", "a1", "a2"], 2), "B": (["b0", "b1", "b2"], 2),
                                       "Y": (["y1", "y2"], 2)},
                      {"dependent": "Y", "algorithm": "seer_a3"}, ids=[f"obs{i}" for i in range(n)],
                      extra=extra, dataset_extra="weight_column = w")


def test_same_seed_byte_identical(tmp_path):
    path = _random_case(tmp_path, extra="[options]\ninit = random\n[output]\nplanes = A:1,2")
    first, second = tmp_path / "one", tmp_path / "two"
    for out in (first, second):
        assert main(["--config", str(path), "--out", str(out), "--seed", "7"]) == 0
    names = sorted(p.name for p in first.iterdir())
    assert "plane_A_1_2.tsv" in names
    match, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
    assert mismatch == [] and errors == []


def test_round_trip_scores(tmp_path):
    path = _random_case(tmp_path)
    config = load_config(path)
    result = fit(config, ingest(config))
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out)]) == 0
    loaded = load_result(out)
    for label, comp in result.all_components():
        np.testing.assert_allclose(loaded.score(label), comp.score, rtol=1e-12, atol=1e-15)
    for label, comp in result.all_components():
        assert list(loaded.loadings[label].values()) == pytest.approx(list(comp.loading), rel=1e-12)


def test_output_directory_precedence(tmp_path, monkeypatch):
    path = e1_case(tmp_path, extra="[output]\ndirectory = from_config")
    assert main(["--config", str(path)]) == 0
    assert (tmp_path / "from_config" / "scores.tsv").exists()
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "from_env"))
    assert main(["--config", str(path)]) == 0
    assert (tmp_path / "from_env" / "scores.tsv").exists()
    assert main(["--config", str(path), "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "scores.tsv").exists()


# ---- planes ---------------------------------------------------------------

def test_e1_plane_pattern(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(plane_case(tmp_path)), "--out", str(out), "--planes", "X:1,2",
                 "--all-variables"]) == 0
    rows = {(r[1], r[2]): (float(r[3]), float(r[4])) for r in read_tsv(out / "plane_X_1_2.tsv")[1:]
            if r[0] == "variable"}
    x, y = rows[("X", "x1")]
    assert x == pytest.approx(1 / SQ2) and abs(y) == pytest.approx(1 / SQ2)
    x2, y2 = rows[("X", "x2")]
    assert x2 == pytest.approx(1 / SQ2) and y2 == pytest.approx(-y)
    # y1 is F1 itself and orthogonal to F2
    assert rows[("Y", "y1")] == pytest.approx((1.0, 0.0), abs=1e-12)
    assert all(-1 - 1e-12 <= v <= 1 + 1e-12 for pair in rows.values() for v in pair)


def test_plane_observation_scores_standardized(tmp_path):
    config = load_config(_random_case(tmp_path))
    result = fit(config, ingest(config))
    plane = export_plane(result, "A", (1, 2))
    xs = np.array([o[1] for o in plane.observations])
    assert result.weights.p @ xs == pytest.approx(0.0, abs=1e-12)
    assert result.weights.p @ xs**2 == pytest.approx(1.0)
    assert {g for g, *_ in plane.variables} == {"A"}
    assert {g for g, *_ in export_plane(result, "A", (1, 2), all_variables=True).variables} == {"A", "B", "Y"}
    assert export_plane(result, "Y", (1, 2)).filename == "plane_Y_1_2.tsv"


@pytest.mark.parametrize("plane", ["X:1,3", "X:1,1", "Q:1,2"])
def test_plane_unknown_component(tmp_path, capsys, plane):
    out = tmp_path / "out"
    assert main(["--config", str(plane_case(tmp_path)), "--out", str(out), "--planes", plane]) == 1
    assert "seer: error:" in capsys.readouterr().err
    config = load_config(plane_case(tmp_path))
    result = fit(config, ingest(config))
    g, j, k = parse_plane(plane)
    with pytest.raises(UnknownComponent):
        export_plane(result, g, (j, k))


# ---- selection ------------------------------------------------------------

def _planted_case(tmp_path, extra=""):
    w, signal, noise, Y = planted_noise_instance()
    cols = {}
    for ds in (signal, noise, Y):
        cols.update(dict(zip(ds.column_names, ds.X.T)))
    return write_case(tmp_path, cols, {"signal": (list(signal.column_names), 2),
                                       "noise": (list(noise.column_names), 2), "Y": (list(Y.column_names), 1)},
                      {"dependent": "Y", "algorithm": "select"}, extra=extra)


def test_selection_trace_planted(tmp_path):
    out = tmp_path / "out"
    path = _planted_case(tmp_path, extra="[select]\nmin_counts = signal:1")
    assert main(["--config", str(path), "--out", str(out)]) == 0
    rows = read_tsv(out / "selection.tsv")
    assert rows[0] == ["step", "removed_group", "removed_rank", "score_signal", "score_noise", "criterion"]
    assert rows[1][1:3] == ["noise", "2"]
    # stops with signal at its minimum and noise exhausted
    assert len(rows) - 1 == 3
    assert rows[-1][4] == "NA"
    assert load_result(out).summary["selection_stop"] == "minimum counts reached"


def test_selection_single_component(tmp_path):
    out = tmp_path / "out"
    path = e1_case(tmp_path, algorithm="select")
    assert main(["--config", str(path), "--out", str(out)]) == 0
    rows = read_tsv(out / "selection.tsv")
    assert len(rows) == 2 and rows[1][1:3] == ["X", "1"]
