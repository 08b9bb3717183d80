import json

import numpy as np
import pytest

from toplayer.cli import CLUSTER_RECIPE, main
from toplayer.complex import build_freudenthal_grid
from toplayer.filtration import lower_star
from toplayer.io import InputError, read_diagram, read_image, read_points, write_diagram, write_pgm, write_points
from toplayer.persistence import compute_persistence


def test_points_round_trip(tmp_path, rng):
    pts = rng.random((7, 3))
    write_points(tmp_path / "p.csv", pts)
    assert np.array_equal(read_points(tmp_path / "p.csv"), pts)


def test_image_readers(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.array([[0.0, 1.0], [0.5, 0.25]]), maxval=100)
    assert np.allclose(read_image(tmp_path / "a.pgm"), [[0, 1], [0.5, 0.25]])
    (tmp_path / "b.csv").write_text("0,5\n10,5\n")
    assert np.array_equal(read_image(tmp_path / "b.csv"), [[0, 0.5], [1, 0.5]])


def test_diagram_round_trip_is_exact(tmp_path, rng):
    img = rng.random((6, 6))
    dgm = compute_persistence(lower_star(build_freudenthal_grid(6, 6), img.ravel()), 1)
    write_diagram(tmp_path / "d.csv", dgm)
    rows = read_diagram(tmp_path / "d.csv")
    want = [(k, p.birth, p.death) for k in (0, 1) for p in dgm.indexed(k)]
    assert [r[:3] for r in rows] == want


def test_empty_input_names_file(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(InputError, match="e.csv"):
        read_points(tmp_path / "e.csv")


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path / "out")])


def test_persistence_two_points(tmp_path):
    (tmp_path / "two.csv").write_text("0,0\n1,0\n")
    assert run(tmp_path, "persistence", str(tmp_path / "two.csv"), "--filtration", "rips") == 0
    lines = (tmp_path / "out" / "diagram.csv").read_text().splitlines()
    assert lines[0] == "dim,birth,death,creator,destroyer"
    assert lines[1].startswith("0,0.0,inf,") and lines[2].startswith("0,0.0,1.0,")
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["command"] == "persistence" and man["seed"] == 0


def test_persistence_empty_file(tmp_path, capsys):
    (tmp_path / "empty.csv").write_text("")
    assert run(tmp_path, "persistence", str(tmp_path / "empty.csv")) != 0
    assert "empty.csv" in capsys.readouterr().err


def test_constant_pgm(tmp_path):
    write_pgm(tmp_path / "c.pgm", np.full((4, 5), 0.5))
    assert run(tmp_path, "persistence", str(tmp_path / "c.pgm"), "--filtration", "lower-star") == 0
    rows = read_diagram(tmp_path / "out" / "diagram.csv")
    assert len(rows) == 1 and rows[0][0] == 0 and rows[0][4] is None


def test_bad_loss_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, "optimize", "--generate", "uniform-points", "--loss", "E(2,0,2;PD0")
    assert info.value.code == 2


def test_optimize_zero_steps(tmp_path):
    assert run(tmp_path, "optimize", "--generate", "uniform-points", "--loss", "E(2,0,2;PD0)", "--steps", "0") == 0
    out = tmp_path / "out"
    assert (out / "initial.csv").read_text() == (out / "final.csv").read_text()


def test_cluster_recipe(tmp_path):
    assert run(tmp_path, "optimize", *CLUSTER_RECIPE) == 0
    curve = np.loadtxt(tmp_path / "out" / "loss_curve.csv", delimiter=",", skiprows=1)
    assert len(curve) == 101 and curve[-1, 1] <= 0.1 * curve[0, 1]


def test_regress_table(tmp_path):
    assert run(tmp_path, "regress", "--beta", "three-values", "--penalty", "top1", "--seeds", "1",
               "--iterations", "30", "--n", "40", "60") == 0
    lines = (tmp_path / "out" / "mse_table.csv").read_text().splitlines()
    assert lines[0].startswith("n,penalty") and len(lines) == 3


def test_features_row(tmp_path, rng):
    write_pgm(tmp_path / "i.pgm", rng.random((28, 28)))
    assert run(tmp_path, "features", str(tmp_path / "i.pgm")) == 0
    lines = (tmp_path / "out" / "features.csv").read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split(",")) == 401


def test_attack_same_as_prediction(tmp_path):
    assert run(tmp_path, "attack", "--target", "same-as-prediction", "--n-attacks", "2",
               "--train-per-class", "6", "--test-per-class", "2") == 0
    lines = (tmp_path / "out" / "attack.csv").read_text().splitlines()[1:]
    assert all(l.split(",")[4] == "true" and float(l.split(",")[6]) == 0.0 for l in lines)


def test_seed_gives_identical_outputs(tmp_path):
    for name in ("a", "b"):
        assert main(["--seed", "5", "optimize", "--generate", "uniform-points", "--n-points", "20",
                     "--loss", "E(2,0,2;PD0)", "--steps", "3", "--out-dir", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "final.csv").read_text() == (tmp_path / "b" / "final.csv").read_text()


def test_selftest_quick(tmp_path):
    assert run(tmp_path, "selftest", "--quick") == 0


def test_json_format(tmp_path):
    (tmp_path / "two.csv").write_text("0,0\n1,0\n")
    assert run(tmp_path, "persistence", str(tmp_path / "two.csv"), "--filtration", "rips", "--format", "json") == 0
    recs = json.loads((tmp_path / "out" / "diagram.json").read_text())
    assert recs[1]["death"] == "1.0"
