import json

import numpy as np
import pytest

from homwalk.cli import EXIT_ERROR, EXIT_INDETERMINATE, EXIT_OK, main
from homwalk.exceptions import ConfigError
from homwalk.io import bundled_names, load_matrix, load_measure, load_spec

PHI = (1 + np.sqrt(5)) / 2


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


@pytest.mark.parametrize(
    "matrix, kappa",
    [
        (np.eye(2), [0.0, 0.0]),
        (np.diag([2.0, 0.5]), [np.log(2), -np.log(2)]),
        (np.array([[1.0, 1.0], [0.0, 1.0]]), [np.log(PHI), -np.log(PHI)]),
    ],
)
def test_decompose(capsys, tmp_path, matrix, kappa):
    path = write(tmp_path, "m.json", {"matrix": matrix.tolist()})
    code, out, _ = run(capsys, "decompose", path)
    res = json.loads(out)["result"]
    assert code == EXIT_OK
    assert np.allclose(res["kappa"], kappa, atol=1e-12)
    if np.allclose(matrix, np.eye(2)):
        assert np.allclose(res["sigma"], 0)


def test_classify_recurrent(capsys):
    code, out, _ = run(
        capsys, "classify", "--measure", "bundled:sl3_symmetric", "--spec", "bundled:sl3_recurrent",
        "--steps", "2000", "--trajectories", "40",
    )
    doc = json.loads(out)
    assert code == EXIT_OK and doc["result"]["verdict"]["kind"] == "Recurrent"
    assert doc["provenance"]["seed"] == 0 and doc["provenance"]["version"]


def test_classify_proper(capsys):
    code, out, _ = run(
        capsys, "classify", "--measure", "bundled:sl3_symmetric", "--spec", "bundled:sl3_proper_n",
        "--steps", "500", "--trajectories", "10",
    )
    v = json.loads(out)["result"]["verdict"]
    assert (v["kind"], v["reason"]) == ("Transient", "ProperUnipotent")


def test_classify_indeterminate_exit_code(capsys, tmp_path, monkeypatch):
    from homwalk import cli
    from homwalk.classify import Reason, Verdict, VerdictKind

    monkeypatch.setattr(
        cli, "classify",
        lambda spec, est, z: Verdict(VerdictKind.INDETERMINATE, Reason.STATISTICALLY_AMBIGUOUS, 1.5, 1.0, 1),
    )
    code, _, _ = run(
        capsys, "classify", "--measure", "bundled:sl3_symmetric", "--spec", "bundled:sl3_recurrent",
        "--steps", "10", "--trajectories", "3",
    )
    assert code == EXIT_INDETERMINATE


def test_malformed_json(capsys, tmp_path):
    path = write(tmp_path, "bad.json", '{"atoms": [\n  {"weight": 1,}\n]}')
    code, out, err = run(capsys, "lyapunov", "--measure", path)
    assert code == EXIT_ERROR and out == ""
    assert f"{path}:2:" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "lyapunov", "--measure", "/nonexistent/m.json")
    assert code == EXIT_ERROR and "cannot read" in err


def test_dim_mismatch_between_spec_and_measure(capsys):
    code, _, err = run(capsys, "classify", "--measure", "bundled:sl2_dense", "--spec", "bundled:sl3_recurrent")
    assert code == EXIT_ERROR and "SL(3)" in err


def test_byte_identical_output(capsys, tmp_path):
    args = ["lyapunov", "--measure", "bundled:sl2_dense", "--steps", "200", "--trajectories", "8", "--seed", "4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("HOMWALK_SEED", "17")
    _, out, _ = run(capsys, "lyapunov", "--measure", "bundled:sl2_dense", "--steps", "10", "--trajectories", "2")
    assert json.loads(out)["provenance"]["seed"] == 17


def test_walk_csv(capsys):
    code, out, _ = run(
        capsys, "walk", "--measure", "bundled:sl3_symmetric", "--spec", "bundled:sl4_trivial", "--steps", "5",
        "--format", "csv",
    )
    assert code == EXIT_ERROR  # SL(4) spec against an SL(3) measure
    code, out, _ = run(
        capsys, "walk", "--measure", "bundled:sl4_generic", "--spec", "bundled:sl4_trivial", "--steps", "5",
        "--format", "csv",
    )
    lines = out.splitlines()
    assert code == EXIT_OK and lines[0].startswith("# ")
    assert lines[1] == "step,coord_1,coord_2,coord_3" and len(lines) == 8


def test_spectrum_csv_and_bound(capsys):
    code, out, _ = run(
        capsys, "spectrum", "--measure", "bundled:sl2_dense", "--spec", "bundled:sl2_full", "--grid", "256",
        "--theta", "0,0.5j", "--format", "csv",
    )
    rows = [r.split(",") for r in out.splitlines() if not r.startswith("#")]
    assert code == EXIT_OK and rows[0][0] == "theta_re"
    assert abs(float(rows[1][2]) - 1) < 1e-10 and float(rows[2][4]) < 1
    code, _, err = run(capsys, "spectrum", "--measure", "bundled:sl2_dense", "--theta", "0.5")
    assert code == EXIT_ERROR and "bound" in err


def test_green_ldp_clt_stationary(capsys):
    common = ["--measure", "bundled:sl2_dense"]
    code, out, _ = run(capsys, "green", *common, "--spec", "bundled:sl2_full", "--steps", "200", "--trajectories", "5")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and set(res) == {"local", "horizon"}
    code, out, _ = run(capsys, "ldp", *common, "--spec", "bundled:sl2_full", "--steps", "12", "--trajectories", "200")
    assert code == EXIT_OK and "slope" in json.loads(out)["result"]
    code, out, _ = run(capsys, "clt", *common, "--spec", "bundled:sl2_full", "--steps", "50", "--trajectories", "100")
    assert code == EXIT_OK and "ks_band" in json.loads(out)["result"]
    code, out, _ = run(capsys, "stationary", *common, "--grid", "64", "--format", "csv")
    assert code == EXIT_OK and out.splitlines()[1] == "angle,weight"


def test_density_warning_printed(capsys, tmp_path):
    c, s = np.cos(0.4), np.sin(0.4)
    path = write(tmp_path, "rot.json", {"dim": 2, "atoms": [{"weight": 1, "matrix": [[c, -s], [s, c]]}]})
    code, _, err = run(capsys, "lyapunov", "--measure", path, "--steps", "10", "--trajectories", "2")
    assert code == EXIT_OK and "warning" in err


def test_io_loaders(tmp_path):
    assert {"sl2_dense", "sl3_symmetric", "sl4_generic", "sl2_hyperbolic"} <= set(bundled_names("measures"))
    assert load_spec("bundled:sl3_recurrent").codim == 1
    with pytest.raises(ConfigError, match="no bundled"):
        load_measure("bundled:nope")
    with pytest.raises(ConfigError, match="dim"):
        load_measure(write(tmp_path, "d.json", {"dim": 3, "atoms": [{"weight": 1, "matrix": [[1, 0], [0, 1]]}]}))
    with pytest.raises(ConfigError, match="missing field 'weight'"):
        load_measure(write(tmp_path, "w.json", {"atoms": [{"matrix": [[1, 0], [0, 1]]}]}))
    with pytest.raises(ConfigError):
        load_matrix(write(tmp_path, "v.json", [1, 2, 3]))
    with pytest.raises(ConfigError):
        load_spec(write(tmp_path, "s.json", {"dim": 3, "a_prime_basis": [[1, 0, 0]]}))
