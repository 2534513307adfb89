import os
import random
import re

import pytest

from edlc import errors
from edlc.codegen import emit_kernel, emit_module
from edlc.frontend import load
from edlc.ir import KernelIR, interpret
from edlc.pipeline import CompileOptions, compile_program
from c_eval import evaluate_source
from conftest import GOLDEN, WAVE, compile_wave
from oracles import close, random_env

GOLDEN_CASES = {"wave_d1_o2": (1, 1), "wave_d3_o2": (3, 1), "wave_d3_o4": (3, 2)}


def module_files(dim, w):
    m = emit_module(compile_wave(dim, w), "wave")
    files = {"manifest": m.manifest, "README": m.readme}
    files.update({f"kernels/{n}.src": s for n, s in m.kernels.items()})
    return files


@pytest.mark.parametrize("case", sorted(GOLDEN_CASES))
def test_golden_files(case):
    files = module_files(*GOLDEN_CASES[case])
    root = GOLDEN / case
    if os.environ.get("EDLC_REGEN_GOLDEN"):
        for rel, text in files.items():
            (root / rel).parent.mkdir(parents=True, exist_ok=True)
            (root / rel).write_text(text)
    on_disk = {str(p.relative_to(root)): p.read_text() for p in root.rglob("*") if p.is_file()}
    assert on_disk == files


def test_emission_byte_stable():
    assert module_files(3, 2) == module_files(3, 2)


def test_rhs_dim1_centered_differences():
    src = emit_kernel(compile_wave(1, 1).kernels["RHS"][0], ghost=1)
    body = [l.strip() for l in src.splitlines() if "[IDX(i)] =" in l]
    assert body == [
        "dt_u[IDX(i)] = rho[IDX(i)];",
        "dt_rho[IDX(i)] = (v1[IDX(i+1)] - v1[IDX(i-1)])/(2*dx);",
        "dt_v1[IDX(i)] = (rho[IDX(i+1)] - rho[IDX(i-1)])/(2*dx);",
    ]
    assert "for (int i = 1; i < ni - 1; ++i) {" in src


def test_empty_kernel_is_noop():
    src = emit_kernel(KernelIR("nothing", 2))
    assert "/* empty kernel */" in src and "for" not in src
    assert "void nothing(int ni, int nj)" in src


def test_eps_kernel_dim3_triple_nest_zero_radius():
    k = compile_wave(3).kernels["Energy"][0]
    src = emit_kernel(k)
    loops = re.findall(r"for \(int (\w) = (\d+); \w < (\w+) - (\d+)", src)
    assert loops == [("i", "0", "ni", "0"), ("j", "0", "nj", "0"), ("k", "0", "nk", "0")]
    assert "stencil radius 0,0,0" in src


def test_loop_margin_defaults_to_radius():
    k = compile_wave(2, 3).kernels["RHS"][0]
    src = emit_kernel(k)
    assert "for (int i = 3; i < ni - 3; ++i)" in src and "for (int j = 3;" in src


@pytest.mark.parametrize("dim,w", [(1, 1), (2, 2), (3, 1), (3, 3)])
@pytest.mark.parametrize("passes", [(), ("dce", "cse"), ("dce", "cse", "peephole")])
def test_emitted_source_matches_interpreter(dim, w, passes):
    rng = random.Random(dim * 10 + w)
    c = compile_wave(dim, w, passes=passes)
    for k in c.all_kernels():
        src = emit_kernel(k, dim, ghost=c.ghost_width)
        for _ in range(25):
            env = random_env([k], rng)
            for h in ("dx", "dy", "dz"):
                env.setdefault(h, rng.uniform(0.5, 2))
            got, want = evaluate_source(src, env), interpret(k, env)
            assert got.keys() == want.keys()
            for name in want:
                assert close(got[name], want[name], 1e-12), (k.name, name)


def test_common_subexpressions_become_declarations():
    src = """
begin group Evolved
  u: ""
end group
begin parameters
  a: real ""
end parameters
begin calculation Init
  u = sin(x)
end calculation
begin calculation RHS
  D_t u = (u + 1)**2 + sin(u + 1) exp(a a) - u exp(a a)
end calculation
"""
    c = compile_program(load(src, "m.edl"), CompileOptions(dim=1))
    k = c.kernels["RHS"][0]
    text = emit_kernel(k, 1)
    assert re.search(r"^  const double t\d+ = exp\(a\*a\);$", text, re.M), text  # loop invariant, hoisted
    assert re.search(r"^    const double t\d+ = 1 \+ u\[IDX\(i\)\];$", text, re.M), text
    rng = random.Random(0)
    for _ in range(20):
        env = random_env([k], rng)
        assert close(evaluate_source(text, env)["dt_u"], interpret(k, env)["dt_u"])


def test_manifest_counts_wave():
    c = compile_wave(3)
    text = emit_module(c).manifest
    gfs = re.findall(r"^\[gridfunction (\w+)\]\ngroup: \w+\nrole: (\w+)", text, re.M)
    assert [g for g, r in gfs if r == "evolved"] == ["u", "rho", "v1", "v2", "v3"]
    assert [g for g, r in gfs if r == "extra"] == ["eps"]
    assert len(re.findall(r"^\[parameter ", text, re.M)) == 2
    assert len(re.findall(r"^\[calculation ", text, re.M)) == 3
    assert "calculations: 3\n" in text and "parameters: 2\n" in text


def test_manifest_fourth_order_rhs_radius():
    text = emit_module(compile_wave(3, 2)).manifest
    block = text.split("[calculation RHS]\n")[1].split("\n\n")[0]
    assert "stencil_radius: 2,2,2" in block
    assert "ghost_width: 2\n" in text


def test_manifest_radius_is_max_over_reads():
    c = compile_wave(2, 2, fission={"RHS": [["dt_u"], ["dt_rho", "dt_v1", "dt_v2"]]})
    text = emit_module(c).manifest
    assert "[kernel RHS_0]\ncalculation: RHS\nsource: kernels/RHS_0.src\nstencil_radius: 0,0\n" in text
    assert "[calculation RHS]\nrole: rhs\nkernels: RHS_0 RHS_1\nstencil_radius: 2,2\n" in text


def test_manifest_lists_every_kernel_function():
    c = compile_wave(3)
    text = emit_module(c).manifest
    declared = set(re.findall(r"^\[gridfunction (\w+)\]", text, re.M))
    for k in c.all_kernels():
        for gf in k.read_functions:
            assert gf in declared
        for w in k.writes:
            assert w in declared or w.removeprefix("dt_") in declared


def test_manifest_without_extra_omits_analysis():
    src = WAVE.read_text()
    src = src.replace('begin group Extra\n  eps: "energy density"\nend group\n', "")
    cut = src.index("begin calculation Energy")
    src = src[:cut] + src[src.index("end calculation", cut) + len("end calculation"):]
    c = compile_program(load(src, "noextra.edl"), CompileOptions(dim=3))
    text = emit_module(c).manifest
    assert "[analysis]" not in text
    assert "calculations: 2\n" in text


def test_parameter_default_in_manifest():
    src = WAVE.read_text().replace('A: real "initial amplitude"', 'A: real = 3/2 "initial amplitude"')
    c = compile_program(load(src, "d.edl"), CompileOptions(dim=1))
    assert "[parameter A]\nkind: real\ndefault: 3/2\n" in emit_module(c).manifest


def test_write_directory_layout(tmp_path):
    m = emit_module(compile_wave(1, 1))
    root = m.write(tmp_path)
    assert root == tmp_path / "wave"
    assert sorted(p.name for p in (root / "kernels").iterdir()) == ["Energy.src", "Init.src", "RHS.src"]
    assert (root / "manifest").read_text() == m.manifest
    assert (root / "README").exists()


def test_rewrite_removes_stale_kernels(tmp_path):
    emit_module(compile_wave(1, 1, fission={"RHS": [["dt_u"], ["dt_rho", "dt_v1"]]})).write(tmp_path)
    emit_module(compile_wave(1, 1)).write(tmp_path)
    assert sorted(p.name for p in (tmp_path / "wave" / "kernels").iterdir()) == ["Energy.src", "Init.src", "RHS.src"]


def test_write_failure_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(errors.IoError):
        emit_module(compile_wave(1)).write(blocker)
