"""End-to-end tests of the command line interface."""

import numpy as np
import pytest

from rank1glm.cli import main

SPEC_TEXT = """\
# small synthetic dataset
n = 300
tr = 1.0
p = 6
repeats = 3
isi_range = 3, 6
true_hrf = canonical_shift:1
sigma = 0.5
rho = 0.3
seed = 17
sessions = 3
voxels = 10
"""


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "spec.ini"
    spec.write_text(SPEC_TEXT)
    out = root / "data"
    assert main(["simulate", "--spec", str(spec), "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_outputs_present(self, sim_dir):
        for s in range(3):
            assert (sim_dir / f"events_s{s}.tsv").exists()
            assert (sim_dir / f"bold_s{s}.npy").exists()
            assert (sim_dir / f"confounds_s{s}.csv").exists()
        assert (sim_dir / "truth_hrf.csv").exists()
        assert (sim_dir / "truth.txt").exists()

    def test_bold_shape(self, sim_dir):
        from rank1glm import read_bold

        bold = read_bold(sim_dir / "bold_s0.npy")
        assert bold.shape == (300, 10)

    def test_deterministic_rerun(self, sim_dir, tmp_path):
        from rank1glm import read_bold

        spec = tmp_path / "spec.ini"
        spec.write_text(SPEC_TEXT)
        out = tmp_path / "again"
        assert main(["simulate", "--spec", str(spec), "--out", str(out)]) == 0
        a = read_bold(sim_dir / "bold_s1.npy")
        b = read_bold(out / "bold_s1.npy")
        np.testing.assert_array_equal(a, b)

    def test_bad_spec_key_exit_2(self, tmp_path, capsys):
        spec = tmp_path / "bad.ini"
        spec.write_text("n = 100\nbogus = 3\n")
        code = main(["simulate", "--spec", str(spec), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_spec_exit_2(self, tmp_path):
        code = main(
            ["simulate", "--spec", str(tmp_path / "none.ini"),
             "--out", str(tmp_path / "o")]
        )
        assert code == 2


class TestFit:
    def test_fit_writes_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = main([
            "fit",
            "--bold", str(sim_dir / "bold_s0.npy"),
            "--events", str(sim_dir / "events_s0.tsv"),
            "--confounds", str(sim_dir / "confounds_s0.csv"),
            "--tr", "1.0", "--basis", "canonical:2",
            "--out", str(out),
            "--dump-basis", str(tmp_path / "basis.csv"),
        ])
        assert code == 0
        H = np.loadtxt(out / "hrf.csv", delimiter=",")
        assert H.shape == (24, 10)
        # normalized responses peak at +1
        np.testing.assert_allclose(np.abs(H).max(axis=0), 1.0, atol=1e-9)
        B = np.loadtxt(out / "beta.csv", delimiter=",")
        assert B.shape == (6, 10)
        diag = (out / "diagnostics.csv").read_text().splitlines()
        assert diag[0].startswith("voxel,objective")
        assert len(diag) == 11
        basis = np.loadtxt(tmp_path / "basis.csv", delimiter=",")
        assert basis.shape == (24, 3)

    def test_corrupt_bold_exit_2(self, sim_dir, tmp_path):
        bad = tmp_path / "bad.npy"
        bad.write_bytes(b"garbage")
        code = main([
            "fit", "--bold", str(bad),
            "--events", str(sim_dir / "events_s0.tsv"),
            "--tr", "1.0", "--basis", "canonical:2",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2


class TestValidate:
    def test_validate_end_to_end(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "val"
        code = main([
            "validate", "--data", str(sim_dir), "--basis", "canonical:2",
            "--top-k", "10", "--out", str(out),
        ])
        assert code == 0
        pairs = (out / "loglik_pairs.csv").read_text().splitlines()
        assert pairs[0] == "voxel,loglik_canonical,loglik_rank1"
        assert len(pairs) == 11
        tests = (out / "tests.txt").read_text()
        assert "wilcoxon p_value" in tests
        mean_hrf = np.loadtxt(out / "mean_hrf.csv", delimiter=",")
        assert mean_hrf.shape == (24, 2)
        # tr came from truth.txt, no --tr needed
        assert "wilcoxon p" in capsys.readouterr().out

    def test_single_session_exit_4(self, sim_dir, tmp_path):
        only = tmp_path / "one"
        only.mkdir()
        for name in ("events_s0.tsv", "bold_s0.npy", "confounds_s0.csv",
                     "truth.txt"):
            (only / name).write_bytes((sim_dir / name).read_bytes())
        code = main([
            "validate", "--data", str(only), "--basis", "canonical:2",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 4

    def test_empty_dir_exit_2(self, tmp_path):
        code = main([
            "validate", "--data", str(tmp_path), "--basis", "canonical:2",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2


class TestEncode:
    def test_encode_end_to_end(self, tmp_path, rng):
        from rank1glm.io import write_matrix_csv

        X = rng.standard_normal((60, 4))
        W = rng.standard_normal((4, 12))
        Y = X @ W
        write_matrix_csv(tmp_path / "features.csv", X)
        write_matrix_csv(tmp_path / "bc.csv", Y + 1.0 * rng.standard_normal(Y.shape))
        write_matrix_csv(tmp_path / "br.csv", Y + 0.2 * rng.standard_normal(Y.shape))
        (tmp_path / "folds.txt").write_text(
            "\n".join(str(i % 3) for i in range(60))
        )
        out = tmp_path / "scatter.csv"
        code = main([
            "encode", "--features", str(tmp_path / "features.csv"),
            "--betas-canonical", str(tmp_path / "bc.csv"),
            "--betas-rank1", str(tmp_path / "br.csv"),
            "--folds", str(tmp_path / "folds.txt"),
            "--ridge-lambda", "1.0", "--top-k", "12",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "voxel_id,score_canonical,score_rank1"
        assert len(lines) == 13


class TestMisc:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_unknown_basis_exit_1(self, sim_dir, tmp_path):
        code = main([
            "fit", "--bold", str(sim_dir / "bold_s0.npy"),
            "--events", str(sim_dir / "events_s0.tsv"),
            "--tr", "1.0", "--basis", "spline:3",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 1
