import os

import pytest

from kmm import UMatrix, parse_matrix, random_matrix, write_matrix
from kmm.cli import main

from conftest import naive_matmul


def write_mat(path, rows, width):
    write_matrix(str(path), UMatrix.from_rows(rows, width))
    return str(path)


def read_out(path):
    with open(path) as fh:
        return parse_matrix(fh.read())


class TestMultiply:
    def test_kmm_two_digit_scalar_files(self, tmp_path, capsys):
        a = write_mat(tmp_path / "a.mat", [[0x12]], 8)
        b = write_mat(tmp_path / "b.mat", [[0x10]], 8)
        out = str(tmp_path / "c.mat")
        assert main(["multiply", "--alg", "kmm", "--n", "2", a, b, "--out", out]) == 0
        text = open(out).read()
        assert text.splitlines()[1] == "120"
        assert "mults" in capsys.readouterr().out

    def test_mm1_identity_passthrough(self, tmp_path):
        b_mat = random_matrix(4, 4, 8, seed=1)
        a = write_mat(tmp_path / "a.mat", UMatrix.identity(4, 8).to_lists(), 8)
        b = str(tmp_path / "b.mat")
        write_matrix(b, b_mat)
        out = str(tmp_path / "c.mat")
        assert main(["multiply", "--alg", "mm1", a, b, "--out", out]) == 0
        assert read_out(out).elems == b_mat.elems

    def test_every_algorithm_exact(self, tmp_path):
        a_mat = random_matrix(3, 3, 16, seed=2)
        b_mat = random_matrix(3, 3, 16, seed=3)
        a = str(tmp_path / "a.mat")
        b = str(tmp_path / "b.mat")
        write_matrix(a, a_mat)
        write_matrix(b, b_mat)
        expected = naive_matmul(a_mat, b_mat)
        for alg in ("mm1", "mmn", "ksmm", "kmm"):
            out = str(tmp_path / f"{alg}.mat")
            args = ["multiply", "--alg", alg, a, b, "--out", out]
            if alg != "mm1":
                args += ["--n", "2"]
            assert main(args) == 0
            assert read_out(out).to_lists() == expected

    def test_scalar_algorithms_require_1x1(self, tmp_path, capsys):
        a = write_mat(tmp_path / "a.mat", [[1, 2]], 8)
        b = write_mat(tmp_path / "b.mat", [[1], [2]], 8)
        rc = main(["multiply", "--alg", "ksm", "--n", "2", a, b,
                   "--out", str(tmp_path / "c.mat")])
        assert rc == 1
        assert "1x1" in capsys.readouterr().err

    def test_sm_scalar(self, tmp_path):
        a = write_mat(tmp_path / "a.mat", [[0xFF]], 8)
        b = write_mat(tmp_path / "b.mat", [[0xFF]], 8)
        out = str(tmp_path / "c.mat")
        assert main(["multiply", "--alg", "sm", "--n", "2", a, b, "--out", out]) == 0
        assert read_out(out).at(0, 0) == 0xFE01

    def test_dimension_mismatch_names_invariant(self, tmp_path, capsys):
        a = write_mat(tmp_path / "a.mat", [[1, 2]], 8)
        b = write_mat(tmp_path / "b.mat", [[1, 2]], 8)
        rc = main(["multiply", "--alg", "mm1", a, b, "--out", str(tmp_path / "c.mat")])
        assert rc == 1
        assert "inner dimensions differ" in capsys.readouterr().err

    def test_overwide_value_rejected(self, tmp_path, capsys):
        path = tmp_path / "a.mat"
        path.write_text("1 1 4\nff\n")
        rc = main(["multiply", "--alg", "mm1", str(path), str(path),
                   "--out", str(tmp_path / "c.mat")])
        assert rc == 1
        assert "fit" in capsys.readouterr().err

    def test_bad_digit_count_exits_cleanly(self, tmp_path, capsys):
        a = write_mat(tmp_path / "a.mat", [[1]], 8)
        rc = main(["multiply", "--alg", "kmm", "--n", "3", a, a,
                   "--out", str(tmp_path / "c.mat")])
        assert rc == 1
        assert "power of two" in capsys.readouterr().err


class TestVerify:
    def test_small_grid_passes(self, capsys):
        assert main(["verify", "--reps", "1"]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out
        assert "FAIL" not in out

    def test_zero_reps_formula_only(self, capsys):
        assert main(["verify", "--reps", "0"]) == 0
        assert "all checks passed" in capsys.readouterr().out

    def test_injected_fault_detected(self, capsys):
        assert main(["verify", "--reps", "0", "--self-test-fault"]) == 1
        out = capsys.readouterr().out
        assert "first differing count" in out

    def test_deterministic_output(self, capsys):
        main(["verify", "--reps", "1", "--seed", "5"])
        first = capsys.readouterr().out
        main(["verify", "--reps", "1", "--seed", "5"])
        assert capsys.readouterr().out == first


class TestModel:
    def test_emits_three_csvs(self, tmp_path, capsys):
        assert main(["model", "--out-dir", str(tmp_path)]) == 0
        names = sorted(os.listdir(tmp_path))
        assert names == ["arith_counts.csv", "au_efficiency_roofs.csv",
                         "mult_efficiency_roofs.csv"]

    def test_arith_counts_content(self, tmp_path):
        main(["model", "--out-dir", str(tmp_path)])
        lines = open(tmp_path / "arith_counts.csv").read().splitlines()
        assert lines[0] == "n,alg,arith_count"
        table = {tuple(l.split(",")[:2]): int(l.split(",")[2]) for l in lines[1:]}
        assert table[("2", "kmm")] == 1_605_632
        assert table[("2", "ksmm")] == 3_145_728
        assert table[("2", "mm")] == 2_117_632

    def test_mult_roof_band(self, tmp_path):
        main(["model", "--out-dir", str(tmp_path)])
        lines = open(tmp_path / "mult_efficiency_roofs.csv").read().splitlines()
        roofs = {}
        for line in lines[1:]:
            w, alg, roof = line.split(",")
            roofs[(int(w), alg)] = float(roof)
        for w in range(1, 17):
            expected = 4 / 3 if 9 <= w <= 14 else 1.0
            assert roofs[(w, "ps-kmm")] == pytest.approx(expected)
            assert roofs[(w, "ps-mm2")] == 1.0

    def test_au_roof_levels_column(self, tmp_path):
        main(["model", "--out-dir", str(tmp_path)])
        lines = open(tmp_path / "au_efficiency_roofs.csv").read().splitlines()
        assert lines[0] == "w_in,alg,relative_roof,levels"
        levels = {}
        for line in lines[1:]:
            w, alg, _, lv = line.split(",")
            levels[(int(w), alg)] = int(lv)
        assert all(levels[(w, "ksmm")] == 1 for w in (8, 16, 24, 32, 40, 48, 56, 64))
        assert levels[(8, "kmm")] == 1 and levels[(40, "kmm")] == 2

    def test_deterministic_bytes(self, tmp_path):
        main(["model", "--out-dir", str(tmp_path / "one")])
        main(["model", "--out-dir", str(tmp_path / "two")])
        for name in os.listdir(tmp_path / "one"):
            a = open(tmp_path / "one" / name, "rb").read()
            b = open(tmp_path / "two" / name, "rb").read()
            assert a == b


SIM_CONFIG = """\
variant ps-kmm
x 8
y 8
w_m 8
w_in 12
dims 16x16x16
seed 3
"""


class TestSimulate:
    def test_config_file_run(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(SIM_CONFIG)
        out = str(tmp_path / "report.csv")
        assert main(["simulate", "--config", str(cfgfile), "--out", out]) == 0
        lines = open(out).read().splitlines()
        assert lines[0] == "variant,w_in,w_m,x,y,m,k,n,mode,reads,cycles,efficiency"
        fields = lines[1].split(",")
        assert fields[0] == "ps-kmm" and fields[8] == "kmm2" and fields[9] == "3"
        assert "matches the plain matrix product" in capsys.readouterr().out

    def test_flag_overrides(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(SIM_CONFIG)
        out = str(tmp_path / "report.csv")
        assert main(["simulate", "--config", str(cfgfile), "--w-in", "16",
                     "--out", out]) == 0
        fields = open(out).read().splitlines()[1].split(",")
        assert fields[1] == "16" and fields[8] == "mm2" and fields[9] == "4"

    def test_flags_only_run(self, tmp_path):
        out = str(tmp_path / "report.csv")
        assert main(["simulate", "--variant", "baseline", "--w-in", "8",
                     "--dims", "8x8x8", "--x", "8", "--y", "8", "--w-m", "8",
                     "--seed", "1", "--out", out]) == 0
        assert os.path.exists(out)

    def test_no_check_flag(self, tmp_path):
        out = str(tmp_path / "report.csv")
        assert main(["simulate", "--variant", "ps-kmm", "--w-in", "12",
                     "--dims", "8x8x8", "--x", "8", "--y", "8", "--w-m", "8",
                     "--no-check", "--out", out]) == 0

    def test_byte_identical_reruns(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(SIM_CONFIG)
        out1, out2 = str(tmp_path / "r1.csv"), str(tmp_path / "r2.csv")
        main(["simulate", "--config", str(cfgfile), "--out", out1])
        main(["simulate", "--config", str(cfgfile), "--out", out2])
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("variant ps-kmm\nw_in 40\ndims 4x4x4\n")
        rc = main(["simulate", "--config", str(cfgfile),
                   "--out", str(tmp_path / "r.csv")])
        assert rc == 1
        assert "unsupported width" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["simulate", "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "r.csv")])
        assert rc == 1
