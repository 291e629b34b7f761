import numpy as np
import pytest

from relu_forge.cli import main
from relu_forge.fnn_core import deserialize, evaluate_scalar
from relu_forge.manifold import helix_cloud


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_build_certify_inspect(tmp_path, capsys):
    net = tmp_path / "net.json"
    code, out, _ = run(["build", "--target", "abs", "--N", "2", "--L", "2", "--out", str(net)], capsys)
    assert code == 0 and "K=16" in out
    code, out, _ = run(["certify", "--network", str(net), "--samples", "2000"], capsys)
    assert code == 0 and out.splitlines()[1].endswith(",true")
    code, out, _ = run(["inspect", "--network", str(net)], capsys)
    assert code == 0 and "depth:" in out and "meta.target: abs" in out


def test_sweep_and_plan_csv(capsys):
    code, out, _ = run(["sweep", "--target", "abs", "--Ns", "1,2", "--Ls", "1", "--samples", "500"], capsys)
    assert code == 0 and len(out.splitlines()) == 3
    code, out, _ = run(["plan", "--epsilon", "0.01", "--d", "2", "--p", "1"], capsys)
    assert out.splitlines()[1].split(",")[4:7] == ["case1", "2", "50"]


def test_extend_and_manifold(tmp_path, capsys):
    t = np.linspace(0, np.pi / 2, 300)
    dom = tmp_path / "dom.csv"
    np.savetxt(dom, np.c_[np.cos(t), np.sin(t), t], delimiter=",")
    code, out, _ = run(["extend", "--domain", str(dom), "--lam", "1.5708", "--N", "2", "--L", "1"], capsys)
    assert code == 0 and out.splitlines()[1].endswith("true,true")
    cloud = tmp_path / "cloud.csv"
    np.savetxt(cloud, helix_cloud(10, 300, 0.01).points, delimiter=",")
    code, out, _ = run(["manifold", "--cloud", str(cloud), "--target", "linear", "--d-low", "3",
                        "--epsilon", "0.01", "--N", "1", "--L", "2"], capsys)
    assert code == 0, out


def test_error_exit_codes(tmp_path, capsys):
    assert run(["build", "--target", "nope"], capsys)[0] == 2
    assert run(["build", "--target", "abs", "--N", "0"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    code, _, err = run(["inspect", "--network", str(bad)], capsys)
    assert code == 3 and "line 1" in err
    assert run(["inspect", "--network", str(tmp_path / "missing.json")], capsys)[0] == 3
    assert run(["frobnicate"], capsys)[0] == 2


def test_outputs_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        net = tmp_path / f"n{k}.json"
        run(["build", "--target", "holder_sqrt", "--N", "2", "--L", "1", "--out", str(net)], capsys)
        outs.append(net.read_bytes())
    assert outs[0] == outs[1]
    X = np.random.default_rng(0).random((1000, 2))
    a, b = deserialize(outs[0]), deserialize(outs[1])
    assert np.array_equal(evaluate_scalar(a, X), evaluate_scalar(b, X))
