import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neutral_spectra import io
from neutral_spectra.cli import main
from neutral_spectra.errors import ValidationError
from neutral_spectra.kernel_spec import KernelSpec, random_birth_death
from neutral_spectra.neutral_lift import TriIndex, lift_full
from neutral_spectra.qsd import A2dMCSpec


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestParse:
    def test_general(self):
        f = io.parse_chain_spec('{"type": "general", "rows": [[1, 0], [0.5, 0.5]]}')
        assert f.kind == "general" and isinstance(f.value, KernelSpec) and f.N == 1

    def test_birth_death_file(self, data_dir):
        f = io.load_chain_spec(data_dir / "neutral_bd.json")
        assert f.N == 5 and f.value.rows[1, 2] == 0.3

    def test_a2dmc_residual_mass_goes_to_origin(self, data_dir):
        f = io.load_chain_spec(data_dir / "worked_n2.json")
        assert isinstance(f.value, A2dMCSpec)
        idx = f.value.index
        assert f.value.pi[idx.index(1, 0), idx.index(0, 0)] == pytest.approx(0.7)
        np.testing.assert_allclose(f.value.pi.sum(axis=1), 1.0, atol=1e-15)

    def test_moran(self, data_dir):
        f = io.load_chain_spec(data_dir / "moran6.json")
        assert f.kind == "moran3" and f.N == 6

    def test_bad_json_names_line(self):
        with pytest.raises(ValidationError, match="line 3"):
            io.parse_chain_spec('{\n"type": "general",\n"rows": [[1,]]\n}')

    def test_short_row_names_line(self):
        text = '{\n  "type": "general",\n  "rows": [\n    [1, 0, 0],\n    [0.5, 0.5],\n    [0, 0, 1]\n  ]\n}'
        with pytest.raises(ValidationError, match=r"line 5: row 1"):
            io.parse_chain_spec(text)

    def test_bad_row_sum_names_line(self):
        text = '{"type": "general", "rows": [\n[1, 0],\n[0.5, 0.6]\n]}'
        with pytest.raises(ValidationError, match="line 3"):
            io.parse_chain_spec(text)

    def test_bad_entry_names_line(self):
        text = ('{"type": "a2dmc", "N": 2, "entries": [\n'
                '  {"from": [1, 1], "to": [1, 0], "prob": 0.1},\n'
                '  {"from": [1, 1], "to": [5, 0], "prob": 0.1}\n]}')
        with pytest.raises(ValidationError, match="line 3: entry 1"):
            io.parse_chain_spec(text)

    def test_unknown_type(self):
        with pytest.raises(ValidationError, match="type"):
            io.parse_chain_spec('{"type": "other"}')

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            io.load_chain_spec(tmp_path / "nope.json")


class TestCsv:
    @given(st.integers(0, 2**32), st.integers(1, 6))
    def test_matrix_round_trip_is_bit_identical(self, seed, N):
        chain = lift_full(random_birth_death(seed, N))
        text = io.matrix_csv(chain.pi, chain.index)
        import tempfile

        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "m.csv"
            p.write_text(text)
            M, idx = io.read_matrix_csv(p, N)
        assert idx.N == N
        assert np.array_equal(M, chain.pi)
        assert io.matrix_csv(M, idx) == text

    def test_header_checked(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("a,b\n")
        with pytest.raises(ValidationError, match="line 1"):
            io.read_matrix_csv(p)

    def test_malformed_row(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("i,j,k,l,value\n0,0,0,0,1.0\n1,x,0,0,1\n")
        with pytest.raises(ValidationError, match="line 3"):
            io.read_matrix_csv(p)

    def test_distribution_csv(self):
        idx = TriIndex(1)
        text = io.distribution_csv(np.array([0.0, 0.25, 0.75]), idx)
        assert text == "i,j,value\n0,1,0.25\n1,0,0.75\n"

    def test_json_encoding(self):
        from fractions import Fraction

        s = io.dump_json({"b": np.float64(0.5), "a": [np.int64(2), Fraction(1, 3), np.bool_(True)]})
        assert s == '{\n  "a": [\n    2,\n    "1/3",\n    true\n  ],\n  "b": 0.5\n}\n'


class TestCli:
    def test_poly(self, capsys):
        code, out, _ = run(capsys, "poly", "--d", 2)
        assert code == 0 and out == "P_2 = sqrt(24) * (1,1):1\n"

    def test_poly_json(self, capsys):
        code, out, _ = run(capsys, "poly", "--d", 3, "--json")
        doc = json.loads(out)
        assert doc["scale_sq"] == "120" and doc["sign"] == -1 and doc["core"] == {"1,2": "-1", "2,1": "1"}

    def test_moran(self, capsys):
        code, out, _ = run(capsys, "moran", "--N", 6)
        assert code == 0 and out == "all eigen-residuals zero; spectrum matches\n"

    def test_moran_from_file(self, capsys, data_dir):
        code, out, _ = run(capsys, "moran", "--input", data_dir / "moran6.json", "--json")
        assert code == 0 and json.loads(out)["ok"] is True

    def test_yaglom_neutral_tie(self, capsys, data_dir):
        code, out, _ = run(capsys, "yaglom", "--input", data_dir / "neutral_bd.json", "--initial", "2,3")
        doc = json.loads(out)
        assert code == 0 and doc["case"] == "TieAboveQ3"
        # neutral chains fix type 1 with probability i/(i+j)
        assert doc["p"] == pytest.approx(0.4, abs=1e-10)

    def test_yaglom_worked(self, capsys, data_dir):
        code, out, _ = run(capsys, "yaglom", "--input", data_dir / "worked_n2.json", "--initial", "1,1")
        doc = json.loads(out)
        assert doc["case"] == "Coexistence"
        assert doc["distribution"]["1,1"] == pytest.approx(3 / 7, abs=1e-12)

    def test_yaglom_csv(self, capsys, data_dir):
        code, out, _ = run(capsys, "yaglom", "--input", data_dir / "worked_n2.json", "--initial", "1,1", "--csv")
        assert out.splitlines()[0] == "i,j,value" and len(out.splitlines()) == 6

    def test_spectrum(self, capsys, data_dir):
        code, out, _ = run(capsys, "spectrum", "--input", data_dir / "neutral_bd.json")
        doc = json.loads(out)
        assert doc["count"] == 21 and doc["residuals_ok"] is True
        assert doc["eigenvalues"][0]["theta"] == pytest.approx(1.0)

    def test_dirichlet(self, capsys, data_dir):
        code, out, _ = run(capsys, "dirichlet", "--input", data_dir / "neutral_bd.json")
        assert code == 0 and json.loads(out)["ok"] is True

    def test_qsd(self, capsys, data_dir):
        code, out, _ = run(capsys, "qsd", "--input", data_dir / "worked_n2.json")
        doc = json.loads(out)
        assert doc["family"] is True
        assert [q["kind"] for q in doc["qsds"]] == ["axis1", "axis2", "interior"]

    def test_validate_and_blocks(self, capsys, data_dir):
        code, out, _ = run(capsys, "validate", "--input", data_dir / "neutral_bd.json")
        assert json.loads(out) == {"N": 5, "reversible": True, "type": "birth_death", "valid": True}
        code, out, _ = run(capsys, "blocks", "--input", data_dir / "neutral_bd.json", "--d", 2)
        doc = json.loads(out)
        assert doc["2"]["states"] == [2, 3, 4, 5] and len(doc["2"]["matrix"]) == 4

    def test_lift_round_trips(self, capsys, data_dir, tmp_path):
        code, _, _ = run(capsys, "lift", "--input", data_dir / "neutral_bd.json", "--out", tmp_path)
        M, idx = io.read_matrix_csv(tmp_path / "lift.csv", 5)
        spec = io.load_chain_spec(data_dir / "neutral_bd.json").value
        assert np.array_equal(M, lift_full(spec).pi)

    def test_truncate_compare(self, capsys, data_dir):
        code, out, _ = run(capsys, "truncate-compare", "--input", data_dir / "neutral_bd.json")
        rows = json.loads(out)["table"]
        assert [r["Nprime"] for r in rows] == [1, 2, 3, 4]
        for r in rows:
            assert r["sup_block_d_ge_2"] == pytest.approx(r["lifted"], abs=1e-8)

    def test_simulate_is_reproducible(self, capsys, data_dir):
        argv = ["simulate", "--input", data_dir / "neutral_bd.json", "--initial", "2,2",
                "--trials", 2000, "--horizon", 5, "--seed", 7]
        first = run(capsys, *argv)
        second = run(capsys, *argv)
        assert first == second and first[0] == 0
        assert json.loads(first[1])["trials"] == 2000

    def test_out_directory(self, capsys, tmp_path):
        code, out, _ = run(capsys, "poly", "--d", 2, "--out", tmp_path / "o")
        assert code == 0 and out == ""
        assert (tmp_path / "o" / "poly.txt").read_text() == "P_2 = sqrt(24) * (1,1):1\n"

    def test_exit_validation(self, capsys):
        code, _, err = run(capsys, "bogus")
        assert code == 1 and "ValidationError" in err

    def test_exit_validation_missing_flag(self, capsys):
        code, _, err = run(capsys, "poly")
        assert code == 1 and "--d" in err

    def test_exit_hypothesis(self, capsys, tmp_path):
        p = tmp_path / "k.json"
        p.write_text('{"type": "general", "rows": [[1, 0, 0, 0], [0.1, 0.2, 0.6, 0.1], [0, 0.1, 0.3, 0.6], [0, 0.6, 0.1, 0.3]]}')
        code, _, err = run(capsys, "spectrum", "--input", p)
        assert code == 2 and "NotReversible" in err

    def test_exit_numerical(self, capsys, data_dir):
        code, _, err = run(capsys, "simulate", "--input", data_dir / "worked_n2.json", "--initial", "1,1",
                           "--trials", 10, "--horizon", 200)
        assert code == 3 and "NoSurvivors" in err
