import subprocess
import sys
from pathlib import Path

import pytest

RUN = [sys.executable, "-m", "morsecut.cli"]


@pytest.fixture()
def files(tmp_path: Path) -> dict[str, Path]:
    out = {}
    out["tri_boundary"] = tmp_path / "tri_boundary.cplx"
    out["tri_boundary"].write_text("0 1\n1 2\n0 2\n")
    out["solid_tri"] = tmp_path / "solid_tri.cplx"
    out["solid_tri"].write_text("0 1 2\n")
    out["bad"] = tmp_path / "bad.cplx"
    out["bad"].write_text("0 oops\n")
    out["rips3"] = tmp_path / "rips3.filt"
    out["rips3"].write_text("0 0\n0 1\n0 2\n1 0 1\n1.5 1 2\n2 0 2\n")
    out["field"] = tmp_path / "fig.field"
    out["field"].write_text("0 5\n1 8\n2 12\n3 3\n")
    out["tetra"] = tmp_path / "tetra.cplx"
    out["tetra"].write_text("0 1 2 3\n")
    out["tmp"] = tmp_path
    return out


def run_cli(*args: str):
    return subprocess.run(RUN + list(args), capture_output=True, text=True)


def test_morse_triangle_boundary(files):
    r = run_cli("morse", str(files["tri_boundary"]), "--solver", "exact")
    assert r.returncode == 0
    assert "morse_numbers: 1 1" in r.stdout
    assert "critical_count: 2" in r.stdout


def test_morse_solid_triangle(files):
    r = run_cli("morse", str(files["solid_tri"]))
    assert r.returncode == 0
    assert "morse_numbers: 1 0 0" in r.stdout


def test_morse_bad_input_exit_two(files):
    r = run_cli("morse", str(files["bad"]))
    assert r.returncode == 2
    assert "error" in r.stderr


def test_homology_fig_complex(files):
    fig = files["tmp"] / "fig_x.cplx"
    fig.write_text("0 1 2\n1 3\n2 3\n")
    r = run_cli("homology", str(fig), "--coeff", "Z", "--oracle", "strict")
    assert r.returncode == 0
    assert "H_0 = Z" in r.stdout
    assert "H_1 = Z" in r.stdout
    assert "oracle_match: true" in r.stdout


def test_persist_oracle_strict(files):
    r = run_cli("persist", str(files["rips3"]), "--oracle", "strict")
    assert r.returncode == 0
    assert "oracle_match: true" in r.stdout


def test_persist_svg_output(files):
    svg = files["tmp"] / "out.svg"
    r = run_cli("persist", str(files["rips3"]), "--svg", str(svg))
    assert r.returncode == 0
    assert svg.read_text().startswith("<svg")


def test_scalar_zero_violations(files):
    r = run_cli("scalar", str(files["tetra"]), str(files["field"]))
    assert r.returncode == 0
    assert "compatibility_violations: 0" in r.stdout
    assert "critical_count: 1" in r.stdout


def test_prune_solid_triangle(files):
    r = run_cli("prune", str(files["solid_tri"]), "--oracle", "strict")
    assert r.returncode == 0
    assert "cells_after: 1" in r.stdout
    assert "core_check: pass" in r.stdout


def test_reports_byte_identical_across_runs(files):
    args = ("morse", str(files["tri_boundary"]), "--seed", "9",
            "--solver", "exact")
    first = run_cli(*args)
    second = run_cli(*args)
    assert first.stdout == second.stdout
    assert first.returncode == second.returncode == 0


def test_homology_all_coefficients(files):
    for coeff in ("Z", "Z2", "Z3", "Z5"):
        r = run_cli("homology", str(files["tri_boundary"]),
                    "--coeff", coeff, "--oracle", "strict")
        assert r.returncode == 0, r.stderr


def test_gadget_flag_accepted(files):
    for gadget in ("mr", "fft"):
        r = run_cli("morse", str(files["tri_boundary"]), "--gadget", gadget)
        assert r.returncode == 0
        assert "critical_count: 2" in r.stdout


def test_oracle_strict_across_bundled_corpus(files, tmp_path):
    from morsecut import samples as sm

    corpus = {
        "solid_tri": sm.solid_triangle(),
        "tri_boundary": sm.triangle_boundary(),
        "strip": sm.two_triangle_strip(),
        "tetra_boundary": sm.tetra_boundary(),
        "rp2": sm.projective_plane(),
    }
    for name, K in corpus.items():
        path = tmp_path / f"{name}.cplx"
        path.write_text(K.serialize())
        r = run_cli("homology", str(path), "--oracle", "strict")
        assert r.returncode == 0, (name, r.stderr)
        r = run_cli("prune", str(path), "--oracle", "strict")
        assert r.returncode == 0, (name, r.stderr)


def test_config_file_round_trip(files):
    cfg = files["tmp"] / "cfg.json"
    cfg.write_text('{"max_exact_size": 10, "balance_c": 0.25}')
    r = run_cli("morse", str(files["tri_boundary"]), "--config", str(cfg))
    assert r.returncode == 0
    assert '"max_exact_size": 10' in r.stdout
    assert '"balance_c": 0.25' in r.stdout
    # explicit flags override the file
    r = run_cli("morse", str(files["tri_boundary"]), "--config", str(cfg),
                "--balance-c", "0.3")
    assert '"balance_c": 0.3' in r.stdout
