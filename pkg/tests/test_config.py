from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from layerfield.config import ConfigError, ExperimentConfig, load_config, loads_config, parse_config
from layerfield.multilayer import layer_count

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """\
lattice: {dims: [4, 1, 1]}
particles:
  - {label: p}
initial_state:
  terms:
    - {index: [[0, 0]], value: [1.0, 0.0]}
"""


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_load_and_round_trip(path):
    cfg = load_config(path)
    again = loads_config(cfg.dumps())
    assert again.to_dict() == cfg.to_dict()
    assert again.dumps() == cfg.dumps()


def test_defaults_and_initial_state():
    cfg = loads_config(MINIMAL)
    assert cfg.lattice.spacing == 1.0 and cfg.evolution.scheme == "crank_nicolson"
    assert cfg.initial().terms == {((0, 0),): 1}


def test_singlet_config_builds_two_layers():
    cfg = load_config(CONFIGS / "singlet_free.yaml")
    m = cfg.initial()
    assert layer_count(m) == 2
    assert m.norm() == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("patch,fragment", [
    ("lattice: {dims: [4, 1]}", "line 1: lattice.dims"),
    ("lattice: {dims: [4, 1, 1], spacing: -1}", "lattice.spacing: must be positive"),
    ("lattice: {dims: [4, 1, 1], colour: red}", "lattice.colour: unknown key"),
])
def test_lattice_errors_name_line_and_key(patch, fragment):
    text = MINIMAL.replace("lattice: {dims: [4, 1, 1]}", patch)
    with pytest.raises(ConfigError) as e:
        loads_config(text)
    assert fragment in str(e.value)


def test_errors_point_at_nested_lines():
    text = MINIMAL + "evolution:\n  dt: 0.1\n  scheme: rk4\n"
    with pytest.raises(ConfigError, match=r"line 9: evolution\.scheme"):
        loads_config(text)
    bad_index = MINIMAL.replace("[[0, 0]]", "[[9, 0]]")
    with pytest.raises(ConfigError, match=r"line 6: initial_state\.terms\.0\.index\.0"):
        loads_config(bad_index)


def test_referential_checks():
    text = MINIMAL + "hamiltonian:\n  external: [[0, 0, 0, 0], null]\n"
    with pytest.raises(ConfigError, match="one per slot"):
        loads_config(text)
    two = MINIMAL.replace("  - {label: p}", "  - {label: p}\n  - {label: p}")
    with pytest.raises(ConfigError, match="duplicate label"):
        loads_config(two)
    layer = MINIMAL.replace("  terms:\n    - {index: [[0, 0]], value: [1.0, 0.0]}",
                            "  layers:\n    - factors: [{gaussian: {}}, {gaussian: {}}]")
    with pytest.raises(ConfigError, match="expected 1 factors"):
        loads_config(layer)
    with pytest.raises(ConfigError, match="not valid YAML"):
        loads_config("lattice: [")
    with pytest.raises(ConfigError, match="potential"):
        loads_config(MINIMAL + "hamiltonian: {potential: {form: table, params: {values: [[1]]}}}\n")


@given(
    dims=st.tuples(st.integers(1, 4), st.integers(1, 3), st.integers(1, 2)),
    spacing=st.floats(0.1, 4, allow_nan=False),
    dt=st.floats(1e-4, 1.0),
    steps=st.integers(0, 500),
    form=st.sampled_from(["zero", "harmonic", "softened_coulomb", "constant"]),
    amp=st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
    fmt=st.sampled_from(["csv", "jsonl"]),
    seed=st.integers(0, 2**64 - 1),
)
def test_round_trip_property(dims, spacing, dt, steps, form, amp, fmt, seed):
    data = {
        "seed": seed,
        "lattice": {"dims": list(dims), "spacing": spacing},
        "particles": [{"label": "x", "internal_dim": 2}, {"label": "y", "statistics": "boson", "mass": 2.5}],
        "initial_state": {
            "layers": [{"amplitude": list(amp), "factors": [
                {"gaussian": {"center": [0.5, 0, 0], "width": 1.0, "momentum": [0.1, 0, 0],
                              "internal": [[0, 1], [1, 0]]}},
                {"gaussian": {}}]}],
            "terms": [{"index": [[0, 1], [0, 0]], "value": [0.5, -0.5]}],
        },
        "hamiltonian": {"potential": {"form": form, "params": {}}, "pair_count": "ordered"},
        "evolution": {"dt": dt, "steps": steps},
        "output": {"format": fmt},
    }
    cfg = parse_config(data)
    text = cfg.dumps()
    again = loads_config(text)
    assert again.to_dict() == cfg.to_dict()
    assert again.dumps() == text
    assert isinstance(again, ExperimentConfig)
