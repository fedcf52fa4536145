import io
import json

import numpy as np
import pytest

from ambipersuade import _kernels
from ambipersuade.cli import run
from ambipersuade.game import InstanceError
from ambipersuade.io import load_ambiguous, load_game, load_split, read_json
from ambipersuade.oracles import grid_binary, grid_bp, simplex_grid, vertex_enumeration
from ambipersuade.report import SolveReport

from conftest import PHI_R, SIGMA_BP, SIGMA_HI, SIGMA_LO, random_game


def _run(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, (json.loads(out.getvalue()) if code == 0 and out.getvalue() else None)


def _dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def amb_file(tmp_path):
    d = {"experiments": [{"kernel": SIGMA_HI.tolist()}, {"kernel": SIGMA_LO.tolist()}], "weights": [39 / 50, 11 / 50]}
    return _dump(tmp_path / "amb.json", d)


@pytest.fixture
def split_file(tmp_path):
    d = {"hi": {"kernel": SIGMA_HI.tolist()}, "lo": {"kernel": SIGMA_LO.tolist()}, "lam": 0.75}
    return _dump(tmp_path / "split.json", d)


# -------------------------------------------------------------- commands


def test_solve_bp(tmp_path):
    csv = tmp_path / "curve.csv"
    code, rep = _run("solve-bp", "intro", "--no-timestamp", "--curve", str(csv))
    assert code == 0
    assert rep["results"]["value"] == pytest.approx(1.25, abs=1e-9)
    assert np.allclose(rep["results"]["experiment"]["kernel"], SIGMA_BP, atol=1e-7)
    assert csv.read_text().splitlines()[0] == "belief,iu,cav_iu"


def test_game_flag_and_path(tmp_path):
    path = _dump(tmp_path / "g.json", load_game("intro").to_dict())
    _, a = _run("solve-bp", "--game", path, "--no-timestamp")
    _, b = _run("solve-bp", "intro", "--no-timestamp")
    assert a["results"] == b["results"]


def test_check_obedient(amb_file):
    code, rep = _run("check", "intro", "--ambiguous", amb_file, "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0
    assert rep["results"]["obedient"] is True
    assert rep["results"]["effective_measure"] == pytest.approx([0.75, 0.25], abs=1e-12)


def test_check_meu(amb_file):
    code, rep = _run("check", "intro", "--ambiguous", amb_file, "--phi-r", "meu", "--no-timestamp")
    assert code == 0 and rep["results"]["model"] == "meu"
    assert rep["results"]["obedient"] is True


def test_improve_with_split(split_file):
    code, rep = _run("improve", "intro", "--split", split_file, "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0
    assert rep["results"]["sender_value"] == pytest.approx(1.28, abs=1e-12)


def test_split_command():
    code, rep = _run("split", "intro", "--no-timestamp")
    assert code == 0 and rep["results"]["found"]


def test_solve_ambiguous_command():
    code, rep = _run("solve-ambiguous", "intro", "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0
    assert rep["results"]["value"] == pytest.approx(1.28, abs=1e-4)


def test_meu_command():
    code, rep = _run("meu", "intro", "--no-timestamp")
    assert code == 0
    assert rep["results"]["supremum"] == pytest.approx(1.5, abs=1e-9)
    code, rep = _run("meu", "intro", "--strong", "--mu", "0.99", "--no-timestamp")
    assert code == 0 and rep["results"]["strong"]


def test_curve_command(tmp_path):
    csv = tmp_path / "c.csv"
    code, rep = _run("curve", "intro", "--resolution", "20", "--csv", str(csv), "--no-timestamp")
    assert code == 0
    assert rep["results"]["cav_at_prior"] == pytest.approx(1.25, abs=1e-9)
    lines = csv.read_text().splitlines()
    assert lines[0] == "belief,iu,cav_iu"
    beliefs = [float(l.split(",")[0]) for l in lines[1:]]
    assert beliefs == sorted(beliefs) and beliefs[0] == 0.0 and beliefs[-1] == 1.0


def test_prior_ambiguity_commands(tmp_path, amb_file, split_file):
    eta = _dump(tmp_path / "eta.json", {"priors": [[0.5, 0.5], [0.55, 0.45]], "weights": [0.5, 0.5]})
    code, rep = _run("prior-ambiguity", "check", "intro", "--eta", eta, "--ambiguous", amb_file, "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0 and "obedient" in rep["results"]
    base = _dump(tmp_path / "base.json", {"kernel": [[1, 0, 0], [0.35, 0.65, 0]]})
    split = _dump(tmp_path / "sp.json", {"hi": {"kernel": SIGMA_HI.tolist()}, "lo": {"kernel": SIGMA_LO.tolist()}, "lam": 0.65})
    code, rep = _run("prior-ambiguity", "improve", "intro", "--eta", eta, "--experiment", base, "--split", split, "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0
    assert rep["results"]["mu_bar"] == pytest.approx(0.68337, abs=1e-5)


def test_prior_ambiguity_needs_eta(capsys):
    code, _ = _run("prior-ambiguity", "check", "intro", "--phi-r", "log:1,5,1,0")
    assert code == 1
    assert "error: --eta" in capsys.readouterr().err


def test_validate_command(amb_file):
    code, rep = _run("validate", "intro", "--ambiguous", amb_file, "--phi-r", "log:1,5,1,0", "--no-timestamp")
    assert code == 0 and rep["results"]["clean"]


def test_out_flag(tmp_path):
    out = tmp_path / "r.json"
    code, rep = _run("solve-bp", "intro", "--out", str(out))
    assert code == 0 and rep is None
    assert json.loads(out.read_text())["results"]["value"] == pytest.approx(1.25)


# ---------------------------------------------------------------- errors


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["solve-bp", "intro", "--bogus"], stdout=io.StringIO())
    assert exc.value.code == 2


def test_missing_game_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["solve-bp"], stdout=io.StringIO())
    assert exc.value.code == 2


def test_missing_file_exits_1(tmp_path, capsys):
    code, _ = _run("solve-bp", str(tmp_path / "nope.json"))
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_domain_error_exits_1(tmp_path, capsys):
    g = random_game(5, n_states=3).to_dict()
    code, _ = _run("curve", _dump(tmp_path / "g3.json", g))
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_bad_attitude_exits_1(capsys):
    code, _ = _run("solve-ambiguous", "intro", "--phi-r", "log:1,1")
    assert code == 1
    assert "error:" in capsys.readouterr().err


# ------------------------------------------------------------------- io


def test_malformed_json_names_path(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"states": [')
    with pytest.raises(InstanceError, match="bad.json: malformed JSON at line 1"):
        read_json(p)


def test_missing_field_named(tmp_path):
    d = load_game("intro").to_dict()
    del d["prior"]
    with pytest.raises(InstanceError, match="'prior'"):
        load_game(_dump(tmp_path / "g.json", d))
    with pytest.raises(InstanceError, match="'weights'"):
        load_ambiguous(_dump(tmp_path / "a.json", {"experiments": []}), load_game("intro"))
    with pytest.raises(InstanceError, match="'lam'"):
        load_split(_dump(tmp_path / "s.json", {"hi": {}, "lo": {}}), load_game("intro"))


def test_unknown_fixture():
    with pytest.raises(InstanceError, match="nonexistent: no such file"):
        load_game("nonexistent")


# --------------------------------------------------------------- reports


def test_reports_are_byte_stable():
    a, b = io.StringIO(), io.StringIO()
    run(["solve-ambiguous", "intro", "--phi-r", "log:1,5,1,0", "--no-timestamp"], stdout=a)
    run(["solve-ambiguous", "intro", "--phi-r", "log:1,5,1,0", "--no-timestamp"], stdout=b)
    assert a.getvalue() == b.getvalue()
    assert "timestamp" not in json.loads(a.getvalue()) or json.loads(a.getvalue())["timestamp"] is None


def test_report_round_trip():
    out = io.StringIO()
    run(["solve-bp", "intro"], stdout=out)
    rep = SolveReport.from_json(out.getvalue())
    assert rep.to_json() == out.getvalue()
    assert rep.timestamp is not None


# ----------------------------------------------------- kernel backends


@pytest.mark.parametrize("seed", range(5))
def test_kernel_backends_agree(seed):
    rng = np.random.default_rng(seed)
    nW, nA, n = 2 + seed % 2, 3 + seed % 3, 40
    K = rng.dirichlet(np.ones(nA), size=(n, nW))
    p = rng.dirichlet(np.ones(nW))
    U = rng.normal(size=(nA, nW))
    assert np.allclose(_kernels._batch_payoffs_np(K, p, U), _kernels._batch_payoffs_nb(K, p, U), atol=1e-12)
    assert np.allclose(_kernels._batch_obedience_np(K, p, U), _kernels._batch_obedience_nb(K, p, U), atol=1e-12)

    T1 = rng.normal(size=(6, 9))
    T2 = T1.copy()
    _kernels._pivot_np(T1, 2, 3)
    _kernels._pivot_nb(T2, 2, 3)
    assert np.allclose(T1, T2, atol=1e-12)

    fs = rng.normal(size=n)
    d = rng.uniform(0.5, 2.0, size=n)
    O = rng.normal(size=(n, 4)) + 0.3
    a = _kernels._best_split_np(fs, d, O, 1e-9)
    b = _kernels._best_split_nb(fs, d, O, 1e-9)
    assert a[0] == pytest.approx(b[0], abs=1e-12)
    assert a[1:3] == b[1:3]


def test_backend_name():
    assert _kernels.backend() in ("numba", "numpy")


# -------------------------------------------------------------- oracles


def test_simplex_grid_counts():
    assert len(simplex_grid(3, 0.5)) == 6
    G = simplex_grid(2, 0.1)
    assert np.allclose(G.sum(axis=1), 1.0) and len(G) == 11


def test_grid_bp_intro(intro):
    res = grid_bp(intro, 0.05)
    assert res.value == pytest.approx(1.25, abs=1e-9)


def test_grid_binary_intro(intro):
    res = grid_binary(intro, PHI_R, step=0.25)
    assert res.value >= 1.28 - 1e-9


def test_vertex_enumeration_small():
    # max x + y subject to x + 2y = 2, x, y >= 0
    value, x = vertex_enumeration(np.array([1.0, 1.0]), np.array([[1.0, 2.0]]), np.array([2.0]))
    assert value == pytest.approx(2.0)
    assert x == pytest.approx([2.0, 0.0])


def test_random_game_helper_is_seeded():
    a, b = random_game(3), random_game(3)
    assert np.array_equal(a.sender_payoff, b.sender_payoff)
