import json
import math
import pathlib

import pytest

import pqvi

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_time_grid():
    g = pqvi.TimeGrid(1.0, 4)
    assert g.nodes == 5
    assert g.tau == pytest.approx(0.25)
    assert g.t(4) == 1.0


def test_scalar_feedback_fixes_exponential_family():
    n = 200
    for c in (0.0, 0.5, 1.0):
        u = [2.0 - math.exp(-c * k / n) for k in range(n + 1)]
        out = pqvi.scalar_feedback(1.0, u)
        assert max(abs(a - b) for a, b in zip(out["z"], u)) <= 1e-8
        assert out["kkt_residual"] <= 1e-9


def test_scalar_feedback_slope_bounds():
    n = 50
    v = [1.0 + 3.0 * math.sin(7.0 * k / n) for k in range(n + 1)]
    z = pqvi.scalar_feedback(1.0, v)["z"]
    assert z[0] == pytest.approx(1.0)
    for a, b in zip(z, z[1:]):
        assert -1e-12 <= (b - a) * n <= 1.0 + 1e-9


def test_obstacle_stays_above():
    n = 100
    obstacle = [0.5 * k / n for k in range(n + 1)]
    u = pqvi.solve_obstacle(obstacle, 0.0, [-1.0] * (n + 1))
    assert all(x >= z - 1e-12 for x, z in zip(u[1:], obstacle[1:]))
    # Pushed down by the forcing, so u rides the obstacle.
    assert u[-1] == pytest.approx(0.5, abs=1e-9)


def test_gradient_ball_methods_agree():
    z = [0.0, 0.9, -0.4, 0.7, 0.0]
    bounds = [0.2, 0.3, 0.25, 0.2]
    exact = pqvi.project_gradient_ball(z, bounds, 0.25)
    dyk = pqvi.project_gradient_ball(z, bounds, 0.25, method="dykstra")
    assert exact[0] == 0.0 and exact[-1] == 0.0
    for a, b, lim in zip(exact, exact[1:], bounds):
        assert abs(b - a) <= lim + 1e-12
    assert max(abs(a - b) for a, b in zip(exact, dyk)) <= 1e-6


def test_p_laplacian_of_quadratic():
    n = 11
    h = 0.1
    u = [0.5 * (i * h) * (1 - i * h) for i in range(n)]
    out = pqvi.p_laplacian(u, h, 2.0)
    # -u'' = 1 in the interior.
    assert all(abs(x - 1.0) < 1e-9 for x in out[1:-1])


def test_bad_argument_raises():
    with pytest.raises(pqvi.PqviError) as info:
        pqvi.scalar_feedback(-1.0, [1.0, 1.0])
    assert info.value.kind == "invalid argument"


def test_scalar_qvi_finds_several_solutions():
    n = 200
    seeds = [[1.0] * (n + 1)] + [[2.0 - math.exp(-c * k / n) for k in range(n + 1)] for c in (0.5, 1.0)]
    out = pqvi.scalar_qvi(1.0, seeds, n)
    assert all(s["converged"] for s in out["solutions"])
    assert len(out["representatives"]) >= 2
    assert out["min_separation"] >= 0.1


def test_run_and_verify_round_trip(tmp_path):
    out = tmp_path / "scalar"
    code, err = pqvi.run(str(ROOT / "configs" / "scalar_example.ini"), output_dir=str(out))
    assert code == pqvi.EXIT_OK, err
    report = json.loads((out / "report.json").read_text())
    assert report["clusters"]["count"] >= 2
    assert (out / "u.csv").read_text().splitlines()[0] == "t,u"
    code, err = pqvi.verify(str(ROOT / "configs" / "scalar_example.ini"), str(out))
    assert code == pqvi.EXIT_OK, err


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.ini"
    text = (ROOT / "configs" / "scalar_example.ini").read_text().replace("p = 2", "p = 1.5")
    cfg.write_text(text)
    code, err = pqvi.run(str(cfg), output_dir=str(tmp_path / "o"))
    assert code == pqvi.EXIT_CONFIG
    assert "p" in err
