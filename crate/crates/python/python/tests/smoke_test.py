"""Smoke test for the compiled extension: run with `python -m pytest` or directly."""

import json
import math

import frozen_discord_py as fd


def test_correlations_of_initial_state():
    c = fd.BDParams(1.0, 0.7, -0.7)
    r = c.correlations()
    assert abs(r["classical"] - 1.0) < 1e-12
    assert abs(r["discord"] - 0.39015) < 1e-4
    assert abs(r["total"] - r["classical"] - r["discord"]) < 1e-12
    assert not r["clamped"]


def test_state_round_trip_and_bruteforce():
    c = fd.BDParams(0.6, -0.3, 0.2)
    rho = c.state()
    back = fd.BDParams.of(rho)
    assert max(abs(a - b) for a, b in [(back.c1, 0.6), (back.c2, -0.3), (back.c3, 0.2)]) < 1e-12
    assert abs(fd.discord_bruteforce(rho) - c.correlations()["discord"]) < 1e-3
    assert abs(fd.fidelity(rho, rho) - 1.0) < 1e-9


def test_transition_time():
    c = fd.BDParams(1.0, 0.7, -0.7)
    gamma = 0.5 * (1 / 0.41 + 1 / 0.19)
    assert abs(c.transition_time(gamma) - math.log(1 / 0.7) / (2 * gamma)) < 1e-12
    frozen = c.dephase(1 / 0.41, 1 / 0.19, 0.02)
    assert abs(frozen.c3 + 0.7) < 1e-12 and frozen.c1 < 1.0


def test_sequences():
    assert fd.sequence_names() == ["XY4S", "XY8S", "XY16S", "KDDXY"]
    xy4 = fd.builtin_sequence("XY4S")
    assert abs(fd.cycle_time(xy4) - 2.427e-3) < 0.01 * 2.427e-3
    text = "[tau/2 P(x) tau P(y) tau P(x) tau P(y) tau/2]^N"
    compiled = json.loads(fd.compile_dsl(text, tau=5.8e-4, repetitions=2))
    assert compiled["repetitions"] == 2
    chi = fd.filter_decay_exponent(fd.compile_dsl(text, tau=1e-3, repetitions=10), 0.04, sigma=20.0, tau_c=0.01)
    free = fd.filter_decay_exponent(fd.compile_dsl("[tau]", tau=0.04), 0.04, sigma=20.0, tau_c=0.01)
    assert 0.0 < chi < free


def test_run_scenario():
    scenario = {
        "label": "free",
        "engine": "analytic",
        "initial": {"bd": {"c1": 1.0, "c2": 0.7, "c3": -0.7}},
        "noise": {"kind": "white", "gamma": [1 / 0.41, 1 / 0.19]},
    }
    r = fd.run_scenario(scenario)
    assert r["engine"] == "analytic"
    assert abs(r["t_bar"] - 0.0463) < 0.3 / 49
    assert len(r["points"]) == 50
    d0 = r["points"][0][5]
    assert all(abs(p[5] - d0) < 1e-9 for p in r["points"] if p[0] <= r["t_bar"])

    ou = fd.calibrate_ou(fd.BDParams(1.0, 0.7, -0.7), 1 / 0.41, 1 / 0.19, 5.8e-3)
    assert ou["kind"] == "ornstein_uhlenbeck"


def test_reconstruct():
    rho = fd.BDParams(1.0, 0.7, -0.7).state()
    r = fd.reconstruct(rho, shots=100_000, seed=1)
    assert r["fidelity"] >= 0.99
    assert len(r["expectations"]) == 15


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"{name}: ok")
