import io
import math
import re

import pytest

from edlc.cli import main, parse_domain, parse_fission, parse_passes
from edlc.errors import ConfigError
from conftest import NEGATIVE, WAVE, negative_fixtures


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    lines = text.strip().splitlines()
    cols = lines[0].split(",")
    return cols, [dict(zip(cols, map(float, l.split(",")))) for l in lines[1:]]


# -- check ---------------------------------------------------------------------------


def test_check_accepts_wave():
    assert run("check", WAVE) == (0, "", "")


def test_check_free_index_mismatch(tmp_path):
    f = tmp_path / "bad.edl"
    f.write_text(WAVE.read_text().replace("D_t rho = delta^ij D_i v_j", "D_t rho = v_i"))
    code, out, err = run("check", f)
    assert code == 1 and out == ""
    assert re.match(rf"{re.escape(str(f))}:27:3: error: FreeIndexMismatch: ", err)


def test_check_missing_file(tmp_path):
    code, _, err = run("check", tmp_path / "nope.edl")
    assert code == 2 and "cannot read" in err


def test_bad_arguments_exit_1():
    assert run("frobnicate")[0] == 1
    assert run("--help")[0] == 0


@pytest.mark.parametrize("name,line,error", negative_fixtures())
def test_negative_fixture_points_at_line(name, line, error):
    path = NEGATIVE / f"{name}.edl"
    code, out, err = run("check", path)
    assert code == 1 and out == ""
    m = re.match(rf"{re.escape(str(path))}:(\d+):(\d+): error: (\w+): ", err)
    assert m, err
    assert (int(m.group(1)), m.group(3)) == (line, error)


def test_negative_fixture_table_is_complete():
    rows = negative_fixtures()
    assert len(rows) == 20
    assert sorted(p.stem for p in NEGATIVE.glob("*.edl")) == sorted(r[0] for r in rows)


# -- dump-ir -----------------------------------------------------------------------------


def test_dump_ir_expanded_rhs_five_assignments():
    code, out, _ = run("dump-ir", WAVE, "--stage=expanded", "--dim", 3, "--calc", "RHS")
    assert code == 0
    body = [l.strip() for l in out.splitlines()[1:] if l.strip()]
    assert len(body) == 5
    assert body[0] == "dt_u = rho"
    assert body[1] == "dt_rho = PD(v1,1) + PD(v2,2) + PD(v3,3)"
    assert body[2:] == [f"dt_v{k} = PD(rho,{k})" for k in (1, 2, 3)]


def test_dump_ir_lowered_offsets():
    code, out, _ = run("dump-ir", WAVE, "--stage=lowered", "--dim", 1, "--calc", "RHS")
    assert code == 0
    assert "rho[+1]" in out and "rho[-1]" in out and "v1[+1]" in out


def test_dump_ir_is_stable():
    assert run("dump-ir", WAVE, "--order", 4) == run("dump-ir", WAVE, "--order", 4)


def test_dump_ir_unknown_stage():
    code, _, err = run("dump-ir", WAVE, "--stage=bogus")
    assert code == 1 and "UnknownStage" in err


def test_dump_ir_unknown_calc():
    assert run("dump-ir", WAVE, "--calc", "Nope")[0] == 1


# -- compile --------------------------------------------------------------------------------


def test_compile_order2_writes_module(tmp_path):
    code, out, _ = run("compile", WAVE, "--order", 2, "--out", tmp_path)
    assert code == 0
    root = tmp_path / "wave"
    assert sorted(p.name for p in (root / "kernels").iterdir()) == ["Energy.src", "Init.src", "RHS.src"]
    assert (root / "manifest").exists() and (root / "README").exists()
    assert out.splitlines()[0].split()[:3] == ["calculation", "pass", "ops_before"]
    assert "wrote" in out.splitlines()[-1]


def test_compile_fission_four_kernels(tmp_path):
    code, _, _ = run("compile", WAVE, "--fission=RHS:dt_u,dt_rho|dt_v1,dt_v2,dt_v3", "--out", tmp_path)
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "wave" / "kernels").iterdir())
    assert names == ["Energy.src", "Init.src", "RHS_0.src", "RHS_1.src"]


def test_compile_passes_none_emits_lowered(tmp_path):
    run("compile", WAVE, "--passes=none", "--dim", 1, "--out", tmp_path / "a")
    run("compile", WAVE, "--dim", 1, "--out", tmp_path / "b")
    raw = (tmp_path / "a" / "wave" / "kernels" / "Energy.src").read_text()
    opt = (tmp_path / "b" / "wave" / "kernels" / "Energy.src").read_text()
    assert "mad(" not in raw and "mad(" in opt


def test_compile_unwritable_out(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert run("compile", WAVE, "--out", blocker)[0] == 2


def test_compile_bad_fission():
    assert run("compile", WAVE, "--fission=RHS:dt_u|dt_rho")[0] == 1
    assert run("compile", WAVE, "--fission=Nope:x")[0] == 1


# -- run -------------------------------------------------------------------------------------


def test_run_plane_wave_dim1_monotone_time():
    code, out, _ = run("run", WAVE, "--dim", 1, "--resolution", 64, "--order", 2, "--preset", "plane-wave",
                       "--t-final", 0.5)
    assert code == 0
    cols, rows = csv_rows(out)
    assert cols[0] == "t" and cols[-1] == "energy"
    assert "rho_L2" in cols and "v1_Linf" in cols
    times = [r["t"] for r in rows]
    assert all(a < b for a, b in zip(times, times[1:]))
    assert times[-1] == pytest.approx(0.5, abs=1e-14)


def test_run_t_final_zero_single_row():
    code, out, _ = run("run", WAVE, "--dim", 1, "--resolution", 16, "--t-final", 0)
    assert code == 0
    assert len(out.strip().splitlines()) == 2


def test_run_param_scales_amplitude():
    code, out, _ = run("run", WAVE, "--dim", 1, "--resolution", 16, "--t-final", 0, "--param", "A=2",
                       "--domain=-pi:pi")
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["rho_Linf"] == 2.0


def test_run_unknown_parameter_lists_declarations():
    code, _, err = run("run", WAVE, "--dim", 1, "--param", "Q=1", "--t-final", 0)
    assert code == 1
    assert "Q" in err and "A: real, W: real" in err


def test_run_deterministic_output():
    args = ("run", WAVE, "--dim", 2, "--resolution", 12, "--t-final", 0.3, "--workers", 2, "--tiles", "4x12")
    assert run(*args) == run(*args)


def test_run_writes_out_and_snapshot(tmp_path):
    code, out, _ = run("run", WAVE, "--dim", 1, "--resolution", 8, "--t-final", 0.1,
                       "--out", tmp_path / "d.csv", "--snapshot", tmp_path / "snap")
    assert code == 0 and out == ""
    assert (tmp_path / "d.csv").read_text().startswith("t,")
    assert (tmp_path / "snap.bin").stat().st_size == 4 * 8 * 8  # u, rho, v1, eps
    assert "time: 0.1" in (tmp_path / "snap.txt").read_text()


def test_run_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\ndim = 1\nresolution = 16\nt_final = 0\nparam = A=3\n")
    code, out, _ = run("run", WAVE, "--config", cfg, "--domain=-pi:pi")
    assert code == 0 and csv_rows(out)[1][0]["rho_Linf"] == 3.0
    code, out, _ = run("run", WAVE, "--config", cfg, "--domain=-pi:pi", "--param", "A=5")
    assert code == 0 and csv_rows(out)[1][0]["rho_Linf"] == 5.0


def test_run_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run("run", WAVE, "--config", cfg)[0] == 1
    assert run("run", WAVE, "--config", tmp_path / "missing.cfg")[0] == 2


@pytest.mark.parametrize("flag", [["--order", "3"], ["--dim", "4"], ["--resolution", "x"], ["--tiles", "2x2"],
                                  ["--cfl", "-1"], ["--workers", "0"]])
def test_run_rejects_bad_config(flag):
    assert run("run", WAVE, "--dim", 1, "--t-final", 0, *flag)[0] == 1


def test_run_non_finite_reports_step():
    code, _, err = run("run", WAVE, "--dim", 1, "--resolution", 16, "--param", "W=0", "--domain=-pi:pi")
    assert code == 1 and "NonFiniteDetected" in err and "step 0" in err


# -- bench ------------------------------------------------------------------------------------


def test_bench_model_only_small_grid_whole_plan():
    code, out, _ = run("bench", WAVE, "--resolution", 8, "--model-only")
    assert code == 0
    assert "chosen: 8x8x8" in out


def test_bench_model_only_deterministic():
    args = ("bench", WAVE, "--resolution", 32, "--order", 4, "--model-only", "--cache-kb", 64)
    first = run(*args)
    assert first[0] == 0 and first == run(*args)


def test_bench_measured_reports_speedup():
    code, out, _ = run("bench", WAVE, "--dim", 2, "--resolution", 32, "--top", 2, "--repeats", 1)
    assert code == 0 and "speedup over whole-interior plan" in out


# -- stencil-table --------------------------------------------------------------------------------


@pytest.mark.parametrize("args,coeffs,power", [
    (["-d", "2", "-w", "1"], "1 -2 1", 2),
    (["-d", "1", "-w", "1"], "-1/2 0 1/2", 1),
    (["-d", "1", "-w", "2"], "1/12 -2/3 0 2/3 -1/12", 1),
    (["-d", "1", "--order", "4"], "1/12 -2/3 0 2/3 -1/12", 1),
])
def test_stencil_table(args, coeffs, power):
    code, out, _ = run("stencil-table", *args)
    assert code == 0
    assert f"coefficients: {coeffs}\n" in out and f"scale: 1/h^{power}\n" in out


def test_stencil_table_infeasible():
    code, _, err = run("stencil-table", "-d", "3", "-w", "1")
    assert code == 1 and "InfeasibleStencil" in err


# -- option parsers ----------------------------------------------------------------------------------


def test_option_parsers():
    assert parse_passes("none") == ()
    assert parse_passes("cse,dce") == ("cse", "dce")
    with pytest.raises(ConfigError):
        parse_passes("cse,magic")
    assert parse_fission("RHS:a,b|c; Init:u|rho") == {"RHS": [["a", "b"], ["c"]], "Init": [["u"], ["rho"]]}
    assert parse_domain("-pi:pi") == ((-math.pi, math.pi),)
    assert parse_domain("0:1,0:2*pi") == ((0.0, 1.0), (0.0, 2 * math.pi))
    with pytest.raises(ConfigError):
        parse_domain("0-1")
