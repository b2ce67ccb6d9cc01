import json
from pathlib import Path

import pytest

from causalembed.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def edges_file(tmp_path):
    path = tmp_path / "edges.tsv"
    path.write_text(
        "beagle\tdog\ndog\tmammal\ncat\tmammal\nmammal\tanimal\n", encoding="utf-8"
    )
    return path


@pytest.fixture
def embedded(tmp_path, edges_file, capsys):
    out = tmp_path / "emb.json"
    code, _, _ = run(
        capsys, "embed", "--pairs", str(edges_file), "--out", str(out), "--seed", "3"
    )
    assert code == 0
    return out


class TestEmbedCommand:
    def test_perfect_run_exit_zero(self, tmp_path, edges_file, capsys):
        out = tmp_path / "emb.json"
        code, stdout, _ = run(
            capsys,
            "embed", "--pairs", str(edges_file), "--out", str(out),
            "--dim", "3", "--eps1", "1e-5", "--eps2", "0", "--seed", "42",
        )
        assert code == 0
        status = json.loads(stdout)
        assert status["perfect"] is True
        assert Path(out).exists()
        manifest = json.loads((tmp_path / "emb.manifest.json").read_text())
        assert manifest["outcome"]["perfect"] is True
        assert "timings" in manifest
        emb_data = json.loads(out.read_text())
        assert emb_data["input_digest"] == manifest["input_digest"]

    def test_missing_file_exit_one(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "embed", "--pairs", str(tmp_path / "absent.tsv"),
            "--out", str(tmp_path / "x.json"),
        )
        assert code == 1
        assert "error" in err

    def test_generated_run(self, tmp_path, capsys):
        out = tmp_path / "gen.json"
        code, stdout, _ = run(
            capsys,
            "embed", "--gen", "n=300,depth=8,two_parent=5", "--seed", "7",
            "--out", str(out), "--save-edges", str(tmp_path / "gen.tsv"),
        )
        assert code == 0
        assert json.loads(stdout)["perfect"] is True
        assert (tmp_path / "gen.tsv").exists()

    def test_config_file_with_flag_override(self, tmp_path, edges_file, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 5, "margin": 1e-4}))
        out = tmp_path / "emb.json"
        code, _, _ = run(
            capsys, "embed", "--pairs", str(edges_file), "--out", str(out),
            "--config", str(cfg_path), "--eps1", "1e-5",
        )
        assert code == 0
        written = json.loads(out.read_text())
        assert written["config"]["seed"] == 5  # from file
        assert written["config"]["margin"] == 1e-5  # flag wins

    def test_determinism_identical_bytes(self, tmp_path, edges_file, capsys):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            code, _, _ = run(
                capsys, "embed", "--pairs", str(edges_file),
                "--out", str(out), "--seed", "11",
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestQueryCommand:
    def test_chain_to_root(self, embedded, capsys):
        code, stdout, _ = run(capsys, "query", "--emb", str(embedded),
                              "--token", "beagle")
        assert code == 0
        line = json.loads(stdout)
        assert line["chain"] == ["beagle", "dog", "mammal", "animal"]

    def test_root_query(self, embedded, capsys):
        code, stdout, _ = run(capsys, "query", "--emb", str(embedded),
                              "--token", "animal")
        assert code == 0
        assert json.loads(stdout)["chain"] == ["animal"]

    def test_all_tokens(self, embedded, capsys):
        code, stdout, _ = run(capsys, "query", "--emb", str(embedded), "--all")
        assert code == 0
        assert len(stdout.strip().splitlines()) == 5

    def test_unknown_label_exit_one(self, embedded, capsys):
        code, _, err = run(capsys, "query", "--emb", str(embedded),
                           "--token", "unicorn")
        assert code == 1
        assert "unicorn" in err


class TestVerifyCommand:
    def test_perfect(self, embedded, edges_file, capsys):
        code, stdout, _ = run(capsys, "verify", "--emb", str(embedded),
                              "--pairs", str(edges_file))
        assert code == 0
        assert json.loads(stdout)["perfect"] == 5


class TestEvalCommand:
    def test_perfect_values(self, embedded, edges_file, capsys):
        code, stdout, _ = run(capsys, "eval", "--emb", str(embedded),
                              "--pairs", str(edges_file))
        assert code == 0
        result = json.loads(stdout)
        assert result["mean_rank"] == 1.0
        assert result["map"] == 1.0

    def test_digest_mismatch_exit_one(self, embedded, tmp_path, capsys):
        other = tmp_path / "other.tsv"
        other.write_text("a\tb\n", encoding="utf-8")
        code, _, err = run(capsys, "eval", "--emb", str(embedded),
                           "--pairs", str(other))
        assert code == 1
        assert "digest" in err

    def test_ranks_csv(self, embedded, edges_file, tmp_path, capsys):
        csv_path = tmp_path / "ranks.csv"
        code, _, _ = run(capsys, "eval", "--emb", str(embedded),
                         "--pairs", str(edges_file), "--ranks-csv", str(csv_path))
        assert code == 0
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "child,parent,rank"
        assert len(lines) == 5  # header + 4 edges


class TestExportPlot:
    def test_points_and_edges(self, embedded, tmp_path, capsys):
        prefix = tmp_path / "viz"
        code, stdout, _ = run(capsys, "export-plot", "--emb", str(embedded),
                              "--out", str(prefix))
        assert code == 0
        points = (tmp_path / "viz.points.csv").read_text().strip().splitlines()
        assert points[0] == "label,t,x1,x2"
        assert len(points) == 6
        edges = (tmp_path / "viz.edges.csv").read_text().strip().splitlines()
        assert len(edges) == 5  # header + one retrieved link per non-root

    def test_cones(self, embedded, tmp_path, capsys):
        prefix = tmp_path / "viz"
        code, _, _ = run(capsys, "export-plot", "--emb", str(embedded),
                         "--out", str(prefix), "--cones", "--cone-points", "8")
        assert code == 0
        cones = (tmp_path / "viz.cones.csv").read_text().strip().splitlines()
        assert len(cones) == 1 + 5 * 8

    def test_deterministic(self, embedded, tmp_path, capsys):
        p1, p2 = tmp_path / "v1", tmp_path / "v2"
        for p in (p1, p2):
            run(capsys, "export-plot", "--emb", str(embedded), "--out", str(p))
        assert (tmp_path / "v1.points.csv").read_bytes() == \
            (tmp_path / "v2.points.csv").read_bytes()


class TestGenCommand:
    def test_writes_deterministic_tsv(self, tmp_path, capsys):
        out1, out2 = tmp_path / "g1.tsv", tmp_path / "g2.tsv"
        for out in (out1, out2):
            code, stdout, _ = run(
                capsys, "gen", "--n", "100", "--depth", "8", "--branching", "4",
                "--two-parent", "3", "--seed", "5", "--out", str(out),
            )
            assert code == 0
            assert json.loads(stdout)["tokens"] == 100
        assert out1.read_bytes() == out2.read_bytes()

    def test_mammal_scale_spec(self, tmp_path, capsys):
        code, stdout, _ = run(
            capsys, "gen", "--n", "1182", "--depth", "10", "--two-parent", "10",
            "--seed", "7", "--out", str(tmp_path / "m.tsv"),
        )
        assert code == 0
        summary = json.loads(stdout)
        assert summary["tokens"] == 1182
        assert summary["ambiguity_histogram"] == {"1": 1172, "2": 10}
