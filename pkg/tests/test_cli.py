import json

import pytest

from conftest import GOLDEN, STAIRCASE, read_pair_csv
from digivis import io
from digivis.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, main


@pytest.fixture
def stair_file(tmp_path):
    path = tmp_path / "stair.txt"
    path.write_text("\n".join(f"{x} {y}" for x, y in STAIRCASE) + "\n")
    return path


def test_digitize_sphere(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["digitize", "--shape", "sphere", "--radius", "3", "--h", "0.5", "--out", str(out)]) == EXIT_OK
    line = capsys.readouterr().out
    assert "voxels=33" in line
    surf, meta = io.load_surface(str(out) + ".surf")
    assert len(surf.inside) == 33
    assert meta["shape"] == "sphere" and meta["h"] == 0.5
    assert (tmp_path / "s.obj").read_text().startswith("# digivis format=1")


def test_digitize_halfspace(tmp_path, capsys):
    assert main(["digitize", "--shape", "halfspace", "--h", "1", "--out", str(tmp_path / "w")]) == EXIT_OK
    assert "surfels=" in capsys.readouterr().out


def test_unknown_shape(capsys):
    assert main(["digitize", "--shape", "blob"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "sphere9" in err and "ellipsoid" in err


def test_empty_digitization(tmp_path, capsys):
    # at h = 10 the only lattice point in the box is the torus hole
    code = main(["digitize", "--shape", "torus", "--h", "10", "--out", str(tmp_path / "e")])
    assert code == EXIT_INVALID
    assert "empty" in capsys.readouterr().err


def test_visibility_staircase_golden(tmp_path, stair_file, capsys):
    out = tmp_path / "st"
    code = main(["visibility", "--input", str(stair_file), "--radius", "8", "--out", str(out), "--check-oracle"])
    assert code == EXIT_OK
    assert "oracle=ok" in capsys.readouterr().out
    assert read_pair_csv_skip(str(out) + ".pairs.csv") == read_pair_csv(GOLDEN / "staircase_r8_pairs.csv")
    meta, cols, rows = io.read_csv(str(out) + ".bench.csv")
    assert cols == ["shape", "h", "pointels", "r", "algorithm", "seconds", "pairs"]
    assert rows[0][4] == "engine" and rows[0][6] == "49"
    G, gmeta = io.load_graph(str(out) + ".graph")
    assert gmeta["radius"] == 8 and len(G.points) == 11


def read_pair_csv_skip(path):
    meta, cols, rows = io.read_csv(path)
    assert meta["kind"] == "pairs"
    h = len(cols) // 2
    return {(tuple(map(int, r[:h])), tuple(map(int, r[h:]))) for r in rows}


def test_visibility_random_fixture_check(tmp_path):
    for seed in range(3):
        code = main(["visibility", "--random", "25", "--seed", str(seed), "--radius", "5", "--check-oracle", "--out", str(tmp_path / f"r{seed}")])
        assert code == EXIT_OK


def test_visibility_is_deterministic(tmp_path):
    args = ["visibility", "--random", "25", "--seed", "4", "--radius", "4"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--threads", "3", "--out", str(tmp_path / "b")])
    a = io.read_csv(tmp_path / "a.pairs.csv")[2]
    b = io.read_csv(tmp_path / "b.pairs.csv")[2]
    assert a == b


def test_visibility_radius_zero(stair_file):
    assert main(["visibility", "--input", str(stair_file), "--radius", "0"]) == EXIT_USAGE


def test_visibility_corrupt_surface(tmp_path):
    bad = tmp_path / "bad.surf"
    bad.write_bytes(b"DVSF" + b"\x00" * 7)
    assert main(["visibility", "--input", str(bad), "--radius", "2"]) == EXIT_INVALID


def test_check_oracle_failure_is_fatal(tmp_path, stair_file, monkeypatch):
    import digivis.cli as cli

    real = cli.pairs_to_rows

    def drop_one(G, rmax=None):
        return real(G, rmax)[1:]

    monkeypatch.setattr(cli, "pairs_to_rows", drop_one)
    code = main(["visibility", "--input", str(stair_file), "--radius", "8", "--check-oracle", "--out", str(tmp_path / "x")])
    assert code == EXIT_INVALID


def test_normals_ellipsoid_ladder(tmp_path, capsys):
    code = main(["normals", "--shape", "ellipsoid", "--h", "1", "0.5", "0.25", "--out", str(tmp_path / "e")])
    assert code == EXIT_OK
    lines = [ln for ln in capsys.readouterr().out.splitlines() if "rmse=" in ln]
    assert len(lines) == 3
    rmse = [float(ln.split("rmse=")[1].split()[0]) for ln in lines]
    assert rmse[0] > rmse[1] > rmse[2]
    meta, cols, rows = io.read_csv(tmp_path / "e_h1.normals.csv")
    assert cols == ["px", "py", "pz", "nx", "ny", "nz", "flag"]
    assert meta["config"]["sigma"] == 4.0


def test_normals_halfspace_exact(capsys, tmp_path):
    assert main(["normals", "--shape", "halfspace", "--h", "1", "--out", str(tmp_path / "w")]) == EXIT_OK
    line = capsys.readouterr().out
    assert "rmse=0 " in line and line.strip().endswith("emax=0")


def test_normals_graph_too_small(tmp_path, capsys):
    base = str(tmp_path / "s")
    assert main(["digitize", "--shape", "sphere", "--h", "0.5", "--out", base]) == EXIT_OK
    assert main(["visibility", "--input", base + ".surf", "--radius", "4", "--out", base]) == EXIT_OK
    capsys.readouterr()
    code = main(["normals", "--input", base + ".surf", "--graph", base + ".graph", "--sigma", "4"])
    assert code == EXIT_INVALID
    assert "r >= 8" in capsys.readouterr().err
    code = main(["normals", "--input", base + ".surf", "--graph", base + ".graph", "--sigma", "2", "--out", base])
    assert code == EXIT_OK


def test_sigma_law(tmp_path, capsys):
    assert main(["normals", "--shape", "sphere", "--h", "0.25", "--sigma-law", "1", "--out", str(tmp_path / "n")]) == EXIT_OK
    assert "sigma=2 rmax=4" in capsys.readouterr().out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('shape = "sphere"\nh = 0.5\nradius = 2\nparams = { radius = 1.0 }\n')
    assert main(["digitize", "--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert "voxels=33" in capsys.readouterr().out
    assert main(["digitize", "--config", str(cfg), "--h", "1", "--out", str(tmp_path / "b")]) == EXIT_OK
    assert "voxels=7" in capsys.readouterr().out
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 3\n")
    assert main(["digitize", "--config", str(bad)]) == EXIT_USAGE


def test_bench_outputs(tmp_path, capsys):
    out = str(tmp_path / "b")
    assert main(["bench", "--shape", "sphere", "--h", "0.5", "0.25", "--radius", "3", "--out", out]) == EXIT_OK
    text = capsys.readouterr().out
    assert "exponent=" in text
    meta, cols, rows = io.read_csv(out + ".bench.csv")
    by = {}
    for r in rows:
        by.setdefault(r[1], {})[r[4]] = r[6]
    assert all(v["engine"] == v["oracle"] for v in by.values())
    assert json.dumps(meta["config"])


def test_bench_convergence(tmp_path, capsys):
    out = str(tmp_path / "c")
    assert main(["bench", "--experiment", "convergence", "--shape", "ellipsoid", "--h", "1", "0.5", "--out", out]) == EXIT_OK
    assert "rmse_slope=" in capsys.readouterr().out


def test_pattern_command(tmp_path, capsys):
    (tmp_path / "run.txt").write_text("0 0\n1 0\n2 0\n")
    (tmp_path / "pat.txt").write_text("0 0\n1 0\n")
    code = main(["pattern", "--input", str(tmp_path / "run.txt"), "--pattern", str(tmp_path / "pat.txt"), "--out", str(tmp_path / "m")])
    assert code == EXIT_OK
    assert "matches=2" in capsys.readouterr().out
    assert io.read_csv(tmp_path / "m.matches.csv")[2] == [["0", "0"], ["1", "0"]]


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(["visibility", "--radius", "2"]) == EXIT_USAGE
    assert main(["normals", "--shape", "sphere", "--sigma", "-1"]) == EXIT_USAGE
    assert main(["digitize", "--shape", "sphere", "--param", "radius"]) == EXIT_USAGE
