import copy
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcfol.cli_io.cli import main
from cmcfol.cli_io.config import DEFAULT_CONFIG, load_config, parse_config
from cmcfol.cli_io.io import csv_text, fmt, read_csv, read_meshdump, write_meshdump
from cmcfol.errors import ParseError, ValidationError

from conftest import cone_surface


def _small(**over):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    cfg["surface"]["resolution"] = 16
    cfg["surface"]["grading"]["levels"] = 2
    cfg.update(over)
    return cfg


def _write(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_minimal_config():
    cfg = parse_config({
        "surface": {"tau": [0, 1], "marked": [{"x": 0.5, "y": 0.5, "theta": 1.5}]},
        "geometry": "minkowski",
        "H": [-1],
    })
    assert cfg.H == (-1.0,) and cfg.surface.tau_complex == 1j and cfg.q == 0


def test_ds_range_message():
    with pytest.raises(ValidationError) as exc:
        parse_config(_small(geometry="ds", H=[-0.5]))
    assert exc.value.path == "H[0]" and "H ∈ (−∞,−1)" in str(exc.value)


def test_cone_angle_rejected():
    cfg = _small()
    cfg["surface"]["marked"][0]["theta"] = 3.5
    with pytest.raises(ValidationError) as exc:
        parse_config(cfg)
    assert exc.value.path == "surface.marked[0].theta"


@pytest.mark.parametrize("over,path", [
    ({"H": [-1.0], "K": [-4.0]}, "H"),
    ({"H": [-1.0, -2.0]}, "H"),
    ({"truncation": 4}, "truncation"),
    ({"bogus": 1}, "bogus"),
    ({"solver": {"grad_tol": "x"}}, "solver"),
])
def test_validation_paths(over, path):
    with pytest.raises(ValidationError) as exc:
        parse_config(_small(**over))
    assert exc.value.path.startswith(path)


def test_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_config(p)
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.json")


def test_inputs_hash_stable():
    a, b = parse_config(_small()), parse_config(_small())
    assert a.inputs_hash() == b.inputs_hash()
    assert parse_config(_small(q=[0.2, 0])).inputs_hash() != a.inputs_hash()


def test_fmt():
    assert fmt(-0.0) == "0" and fmt(3) == "3" and fmt(True) == "true" and fmt(None) == ""
    assert float(fmt(0.1)) == 0.1


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trip(x):
    assert float(fmt(x)) == x


def test_header_only_csv(tmp_path):
    assert csv_text(["H", "area"], []) == "H,area\n"


def test_meshdump_round_trip(tmp_path):
    s = cone_surface(8, levels=1)
    rng = np.random.default_rng(0)
    fields = {"u": rng.normal(size=s.n_vertices), "K": np.full(s.n_vertices, -1 / 3)}
    path = write_meshdump(tmp_path / "leaf.mesh", s, fields)
    dump = read_meshdump(path)
    assert np.array_equal(dump.vertices, s.vertices) and np.array_equal(dump.faces, s.faces)
    for k, v in fields.items():
        assert np.array_equal(dump.fields[k], v)


def test_solve_deterministic(tmp_path):
    cfg = _write(tmp_path, _small(formats=["csv", "meshdump"]))
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["solve", "--config", cfg, "--out", str(o)]) == 0
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    assert "solve.csv" in names
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()


def test_unreachable_tolerance_exit_3(tmp_path):
    cfg = _write(tmp_path, _small(solver={"grad_tol": 0.0, "max_newton": 5}))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_validation_exit_2(tmp_path):
    cfg = _write(tmp_path, _small(geometry="ds", H=[-0.5]))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert main(["solve", "--config", str(tmp_path / "none.json")]) == 2


def test_duality_table(tmp_path):
    out = tmp_path / "d"
    assert main(["duality-table", "--geometry", "ads", "--k-grid", "-3", "-2", "--out", str(out)]) == 0
    csv_files = list(out.glob("*.csv"))
    assert len(csv_files) == 1
    text = csv_files[0].read_text()
    assert text.splitlines()[0].startswith("K,d(K),f(K)")
    rows = read_csv(csv_files[0])
    assert float(rows[1]["d(K)"]) == pytest.approx(np.pi / 4, abs=1e-15)


@pytest.mark.parametrize("command", ["uniformize", "flow", "foliate"])
def test_commands_run(tmp_path, command):
    cfg = _write(tmp_path, _small(H=[-2.0, -1.0]))
    out = tmp_path / command
    assert main([command, "--config", cfg, "--out", str(out)]) == 0
    assert any(out.iterdir())


def test_landslide_command(tmp_path):
    cfg = _write(tmp_path, _small(geometry="ads", H=[0.5], formats=["csv", "meshdump"]))
    out = tmp_path / "s"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    dump = next(out.glob("*.mesh"))
    assert main(["landslide", "--config", cfg, "--embedding", str(dump), "--out", str(tmp_path / "l")]) == 0
