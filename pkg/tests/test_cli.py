import json

import numpy as np
import pytest

from ggmtest.cli import main, parse_order, parse_tspec, read_csv_matrix, UsageError
from ggmtest.ggm import mvn_sample
from ggmtest.graph import band_graph_precision, write_edge_list


@pytest.fixture
def files(tmp_path):
    g, omega = band_graph_precision(6, 1, 0.2)
    x = mvn_sample(30, np.zeros(6), omega, np.random.default_rng(0))
    data = tmp_path / "x.csv"
    data.write_text("a,b,c,d,e,f\n" + "\n".join(",".join(f"{v:.10g}" for v in r) for r in x) + "\n")
    graph = tmp_path / "g.edges"
    write_edge_list(g, graph)
    y = x[:, 4] + np.random.default_rng(1).standard_normal(30)
    resp = tmp_path / "y.csv"
    resp.write_text("\n".join(f"{v:.10g}" for v in y) + "\n")
    yb = tmp_path / "yb.csv"
    yb.write_text("\n".join(str(int(v > 0)) for v in y) + "\n")
    return {"data": str(data), "graph": str(graph), "y": str(resp), "yb": str(yb), "dir": tmp_path}


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tspec_and_order():
    assert parse_tspec("1-8", 20) == tuple(range(8))
    assert parse_tspec("1-3,12, 2", 20) == (0, 1, 2, 11)
    for bad in ("", "0", "5-3", "1-30", "x"):
        with pytest.raises(UsageError):
            parse_tspec(bad, 20)
    assert parse_order("3,1,2", 3) == (2, 0, 1)
    assert parse_order("3-1", 3) == (2, 1, 0)
    with pytest.raises(UsageError):
        parse_order("1,1", 3)


def test_csv_reader(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n")
    data, header = read_csv_matrix(p)
    assert header is None and data.shape == (2, 2)
    p.write_text("x,y\n1,2\n")
    assert read_csv_matrix(p)[1] == ["x", "y"]
    for bad in ("1,2\n3\n", "", "1,nan\n", "x,y\n1,z\n"):
        p.write_text(bad)
        with pytest.raises(UsageError):
            read_csv_matrix(p)


def test_sample_writes_copies_and_manifest(files, capsys):
    out = files["dir"] / "copies"
    argv = ["sample", files["data"], files["graph"], "--copies", "3", "--seed", "4", "--out", str(out)]
    code, _, _ = _run(capsys, argv)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["psi_match"] is True
    names = sorted(p.name for p in out.iterdir())
    assert len([n for n in names if n.startswith("copy_")]) == 3
    first = {n: (out / n).read_bytes() for n in names}
    assert _run(capsys, argv)[0] == 0
    assert {n: (out / n).read_bytes() for n in names} == first


def test_sample_n_too_small(files, capsys, tmp_path):
    small = tmp_path / "small.csv"
    small.write_text("1,2,3,4,5,6\n2,1,3,4,5,0\n")
    code, _, err = _run(capsys, ["sample", str(small), files["graph"], "--seed", "1",
                                 "--out", str(tmp_path / "o")])
    assert code == 2 and "n" in err


def test_gof_json_and_validate(files, capsys, tmp_path):
    code, out, _ = _run(capsys, ["gof", files["data"], files["graph"], "--copies", "19",
                                 "--seed", "2"])
    assert code == 0
    res = json.loads(out)
    for key in ("pvalue", "statistic", "observed", "M", "L", "seed", "warnings"):
        assert key in res
    assert res["statistic"] == "F_SUM" and res["M"] == 19
    path = tmp_path / "r.json"
    path.write_text(out)
    code, again, _ = _run(capsys, ["validate", str(path)])
    assert code == 0 and json.loads(again) == res


@pytest.mark.parametrize("stat", ["prc", "erc", "fmax", "glr-l1"])
def test_gof_statistics(files, capsys, stat):
    code, out, _ = _run(capsys, ["gof", files["data"], files["graph"], "--stat", stat,
                                 "--copies", "5", "--seed", "1", "--mode", "rand"])
    assert code == 0 and 0 < json.loads(out)["pvalue"] <= 1


def test_gof_weighted_requires_weights(files, capsys, tmp_path):
    code, _, err = _run(capsys, ["gof", files["data"], files["graph"], "--stat", "prc-w", "--seed", "1"])
    assert code == 2
    w = tmp_path / "w.csv"
    w.write_text("\n".join(",".join("0.5" for _ in range(6)) for _ in range(6)))
    code, out, _ = _run(capsys, ["gof", files["data"], files["graph"], "--stat", "prc-w",
                                 "--weights", str(w), "--copies", "5", "--seed", "1"])
    assert code == 0 and json.loads(out)["statistic"] == "PRC_W"


def test_gof_local(files, capsys):
    code, out, _ = _run(capsys, ["gof", files["data"], files["graph"], "--local", "1-2",
                                 "--copies", "5", "--seed", "1"])
    assert code == 0 and json.loads(out)["statistic"] == "F_SUM_LOCAL"


def test_seed_required(files, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gof", files["data"], files["graph"]])
    assert exc.value.code == 2


def test_unknown_statistic(files, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gof", files["data"], files["graph"], "--stat", "bogus", "--seed", "1"])
    assert exc.value.code == 2


def test_missing_file(files, capsys):
    code, _, _ = _run(capsys, ["gof", "/nonexistent.csv", files["graph"], "--seed", "1"])
    assert code == 1


def test_crt_joint_and_per_variable(files, capsys):
    base = ["crt", files["data"], files["y"], files["graph"], "--target", "4-5",
            "--copies", "9", "--seed", "3"]
    code, out, _ = _run(capsys, base)
    res = json.loads(out)
    assert code == 0 and res["extra"]["procedure"] == "joint"
    code, out, _ = _run(capsys, base + ["--bonferroni-per-variable"])
    res = json.loads(out)
    assert code == 0 and res["extra"]["procedure"] == "bonferroni_per_variable"
    per = res["extra"]["per_variable"]
    assert sorted(per) == ["4", "5"]
    assert res["pvalue"] == pytest.approx(min(1.0, 2 * min(per.values())))


def test_crt_binary_statistic_checks_response(files, capsys):
    code, _, err = _run(capsys, ["crt", files["data"], files["y"], files["graph"], "--target", "1",
                                 "--stat", "glm-dev", "--seed", "1"])
    assert code == 2
    code, out, _ = _run(capsys, ["crt", files["data"], files["yb"], files["graph"], "--target", "1",
                                 "--stat", "glm-dev", "--copies", "5", "--seed", "1"])
    assert code == 0


def test_validate_rejects_garbage(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"pvalue": 2}')
    assert _run(capsys, ["validate", str(p)])[0] == 2
    p.write_text("not json")
    assert _run(capsys, ["validate", str(p)])[0] == 2


def test_bench_identical_reports(capsys, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[band]\nfamily = gof_band\np = 8\nn = 30\nK = 1\nK0 = 1\nM = 9\nR = 4\n"
                   "seed = 5\nmethods = F_SUM, M1P1\n")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert _run(capsys, ["bench", str(cfg), "--out", str(a), "--no-timing"])[0] == 0
    assert _run(capsys, ["bench", str(cfg), "--out", str(b), "--no-timing"])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    recs = [json.loads(line) for line in a.read_text().splitlines()]
    assert [r["method"] for r in recs] == ["F_SUM", "M1P1"]
    for r in recs:
        assert {"proportion", "se", "R"} <= set(r)
    code, out, _ = _run(capsys, ["bench", str(cfg)])
    assert code == 0 and "runtime" in json.loads(out.splitlines()[0])


def test_bench_config_errors(capsys, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[band]\nfamily = gof_band\nR = 0\nmethods = F_SUM\nfoo = 1\n")
    code, _, err = _run(capsys, ["bench", str(cfg)])
    assert code == 2 and "foo" in err
