import json
import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest

from firmcluster.config import ExperimentSpec, parse_config, parse_config_dict, preset
from firmcluster.errors import ConfigError
from firmcluster.model import run
from firmcluster.output import frame_to_csv, run_table, write_results
from firmcluster.params import ModelParams
from firmcluster.plots import SchemaError, plot_static

SVG = "{http://www.w3.org/2000/svg}"


def test_empty_config_gives_defaults():
    spec = parse_config_dict({})
    assert spec.kind == "run"
    p = spec.params
    assert (p.n_firms, p.largest_firm_size, p.genome_size, p.t_final) == (10, 100, 10, 100)


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"p_C": 1.5}, "p_C"),
        ({"d_E": 0}, "d_E"),
        ({"bogus": 1}, "bogus"),
        ({"G": "ten"}, "G"),
        ({"N_f": 2.5}, "N_f"),
        ({"kind": "grid", "axes": {"p_Q": [1]}}, "p_Q"),
        ({"kind": "grid", "axes": {"p_E": [2.0]}}, "p_E"),
        ({"kind": "gsa", "n_base": 8}, "n_base"),
        ({"kind": "optimize", "space": [{"name": "x_M", "lower": 0}]}, "upper"),
        ({"kind": "convergence", "space": [{"name": "p_C", "lower": 0, "upper": 3}]}, "p_C"),
        ({"kind": "run", "n_reps": 3}, "n_reps"),
        ({"workers": 0}, "workers"),
    ],
)
def test_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError, match=key):
        parse_config_dict(doc)


def test_kind_conflict():
    with pytest.raises(ConfigError, match="kind"):
        parse_config_dict({"kind": "gsa"}, "grid")


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(bad)


@pytest.mark.parametrize("name", ["convergence", "table1", "fig1", "fig2"])
@pytest.mark.parametrize("scale", ["desk", "paper"])
def test_presets_round_trip(tmp_path, name, scale):
    spec = parse_config_dict(preset(name, scale))
    path = tmp_path / "resolved.json"
    path.write_text(spec.to_json())
    assert parse_config(path) == spec


def test_preset_sizes():
    assert parse_config_dict(preset("fig1", "paper")).estimated_runs() == 52800
    assert parse_config_dict(preset("fig1", "desk")).estimated_runs() == 2 * 11 * 30
    assert parse_config_dict(preset("table1", "desk")).estimated_runs() == 1024 * 11
    assert parse_config_dict(preset("convergence", "desk")).estimated_runs() == 4000
    assert parse_config_dict(preset("fig2", "desk")).population == 32


def test_run_round_trip_with_overrides(tmp_path):
    spec = parse_config_dict({"p_E": 3e-5, "seed": 99, "dump_state": True})
    assert spec.seed == 99 and spec.dump_state
    path = tmp_path / "c.json"
    path.write_text(spec.to_json())
    assert parse_config(path) == spec
    assert spec.with_overrides(seed=5).params.seed == 5


def test_run_csv_schema():
    text = run_table(run(ModelParams(t_final=3)))
    lines = text.split("\n")
    assert lines[0] == "t,best_fitness,avg_fitness,rel_diff,entropy,diversity"
    assert len(lines) == 6 and lines[-1] == ""
    assert lines[1].startswith("0,")


def test_number_formatting():
    frame = pd.DataFrame({"a": [1, 2], "b": [0.1 + 0.2, np.nan], "c": [True, False]})
    assert frame_to_csv(frame) == "a,b,c\n1,0.3,true\n2,,false\n"


def test_write_results_byte_identical(tmp_path):
    frame = pd.DataFrame({"x": [1.0, 2.5], "y": ["u", "v"]})
    spec = ExperimentSpec(kind="run")
    manifest = {"schema_version": 1, "config": spec.to_dict()}
    write_results({"t": frame}, tmp_path / "a", manifest)
    write_results({"t": frame}, tmp_path / "b", manifest)
    for name in ("t.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert doc["files"] == ["t.csv"]


def test_empty_table_is_header_only(tmp_path):
    write_results({"empty": pd.DataFrame(columns=["a", "b"])}, tmp_path)
    assert (tmp_path / "empty.csv").read_text() == "a,b\n"


def test_write_error_has_path_context(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_results({"t": "a\n"}, blocker / "sub")


def _svg(path):
    return ET.parse(path).getroot()


def test_two_point_series(tmp_path):
    table = pd.DataFrame({"p_E": [1e-4, 1e-4], "d_E": [1.0, 11.0], "avg_fitness": [100.0, 200.0]})
    root = _svg(plot_static(table, "fitness_vs_dE", tmp_path / "f.svg"))
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 1
    assert len(lines[0].get("points").split()) == 2


def test_series_per_interaction_level(tmp_path):
    table = pd.DataFrame(
        {"p_E": [1e-7, 1e-7, 1e-4, 1e-4], "d_E": [1.0, 11.0, 1.0, 11.0], "diversity": [0.5, 0.4, 0.3, 0.1]}
    )
    root = _svg(plot_static(table, "diversity_vs_dE", tmp_path / "d.svg"))
    assert len(root.findall(f"{SVG}polyline")) == 2


def test_empty_series_annotated(tmp_path):
    table = pd.DataFrame(columns=["p_E", "d_E", "avg_fitness"])
    root = _svg(plot_static(table, "fitness_vs_dE", tmp_path / "e.svg"))
    texts = [t.text for t in root.findall(f"{SVG}text")]
    assert "no data" in texts
    assert len(root.findall(f"{SVG}line")) >= 2


def test_pareto_markers_sized_by_samples(tmp_path):
    table = pd.DataFrame(
        {"mean_f": [1, 2, 3, 4, 5.0], "mean_d": [5, 4, 3, 2, 1.0], "n_samples": [1, 2, 5, 10, 100], "p_E": [0, 1, 2, 3, 4.0]}
    )
    root = _svg(plot_static(table, "pareto_front", tmp_path / "p.svg"))
    circles = root.findall(f"{SVG}circle")
    assert len(circles) == 5
    radii = [float(c.get("r")) for c in circles]
    assert radii == sorted(radii) and radii[0] < radii[-1]


def test_missing_columns(tmp_path):
    with pytest.raises(SchemaError, match="avg_fitness"):
        plot_static(pd.DataFrame({"p_E": [1], "d_E": [1]}), "fitness_vs_dE", tmp_path / "x.svg")
