import json
import math
import pathlib

import pytest

import catq

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture
def small():
    c = catq.Config.load(str(CONFIGS / "optimize_s3.json"))
    return c


def test_load_and_validate():
    c = catq.Config.load(str(CONFIGS / "baseline.json"))
    assert c.S == 6
    assert c.validate() == []
    again = catq.Config.from_json(c.to_json())
    assert json.loads(again.to_json()) == json.loads(c.to_json())


def test_stability(small):
    v = catq.stability(small)
    assert v["stable"]
    assert v["orbit_inflow"] < v["orbit_outflow"]


def test_solve_and_measures(small):
    s = catq.solve(small)
    assert math.isclose(sum(s["level_mass"]), 1.0, abs_tol=1e-8)
    m = catq.measures(small)
    for k in ("P_d_n", "P_e", "P_b_c", "E_orbit"):
        assert 0.0 <= m[k]
    assert m["P_d_n"] <= 1.0


def test_sweep_threads_agree(small):
    one = catq.sweep(small, "K2", [0, 1, 2], threads=1)
    three = catq.sweep(small, "K2", [0, 1, 2], threads=3)
    assert one == three
    assert [p["value"] for p in one] == [0, 1, 2]


def test_set_copies(small):
    c = small.copy()
    c.set("K2", 0)
    assert c.K2 == 0
    assert small.K2 == 2


def test_simulate_deterministic(small):
    a = catq.simulate(small, events=20000, seed=5, batches=8)
    b = catq.simulate(small, events=20000, seed=5, batches=8)
    assert a == b
    mean, se = a["P_d_n"]
    assert 0.0 <= mean <= 1.0 and se >= 0.0


def test_evaluate_backup(small):
    d = catq.evaluate_backup(small, 0, 0, 1.0, 1.0)
    assert not d["feasible"]
    assert d["P_e"] == pytest.approx(1.0)


def test_errors(small):
    with pytest.raises(catq.ConfigError):
        catq.Config.from_json("{")
    with pytest.raises(ValueError):
        small.set("no_such_parameter", 1.0)
    c = small.copy()
    c.set("arrivals_normal.rate_N", 50.0)
    with pytest.raises(catq.UnstableError):
        catq.solve(c)
