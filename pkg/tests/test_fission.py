import random

import pytest

from edlc import errors
from edlc.ir import Assign, KernelIR, auto_partition, canonical, cse, dce, fission, fuse, interpret
from edlc.ir.nodes import Add, Load, Mul, Temp
from conftest import compile_wave
from oracles import random_env


def random_partition(outputs, rng):
    outs = list(outputs)
    rng.shuffle(outs)
    n = rng.randint(1, len(outs))
    cuts = sorted(rng.sample(range(1, len(outs)), n - 1)) if n > 1 else []
    cells, prev = [], 0
    for cut in cuts + [len(outs)]:
        cells.append(outs[prev:cut])
        prev = cut
    return cells


def test_split_wave_rhs_dim1():
    k = compile_wave(1).kernels["RHS"][0]
    first, second = fission(k, [["dt_u", "dt_rho"], ["dt_v1"]])
    assert first.writes == ("dt_u", "dt_rho")
    assert second.writes == ("dt_v1",)
    assert ("rho", (1,)) not in first.reads and ("rho", (-1,)) not in first.reads
    assert first.name == "RHS_0" and second.name == "RHS_1"


def test_trivial_partition_is_dce():
    k = compile_wave(3).kernels["RHS"][0]
    (only,) = fission(k, [list(k.writes)])
    assert only == dce(k)


def test_shared_temp_duplicated():
    a, b = Load("a", (0,)), Load("b", (0,))
    k = KernelIR("k", 1, (Assign("t0", Mul(a, b), False), Assign("x", Add(Temp("t0"), a)), Assign("y", Mul(Temp("t0"), b))))
    kx, ky = fission(k, [["x"], ["y"]])
    assert kx.temps == ("t0",) and ky.temps == ("t0",)


@pytest.mark.parametrize("cells", [[["dt_u"]], [["dt_u"], ["dt_u", "dt_rho", "dt_v1"]], [["dt_u", "dt_rho"], ["dt_v1", "zz"]], [[], ["dt_u", "dt_rho", "dt_v1"]]])
def test_invalid_partitions(cells):
    k = compile_wave(1).kernels["RHS"][0]
    with pytest.raises(errors.InvalidPartition):
        fission(k, cells)


def test_fission_union_of_writes():
    rng = random.Random(5)
    k = compile_wave(3, 2).kernels["RHS"][0]
    for _ in range(20):
        parts = fission(k, random_partition(k.writes, rng))
        assert sorted(w for p in parts for w in p.writes) == sorted(k.writes)


def test_fuse_fission_round_trip_random_partitions():
    rng = random.Random(11)
    for dim, w in [(1, 1), (3, 1), (3, 2)]:
        k = compile_wave(dim, w).lowered["RHS"]
        ref = canonical(cse(dce(k)))
        for _ in range(20):
            parts = fission(cse(k), random_partition(k.writes, rng))
            assert canonical(cse(fuse(parts, "RHS"))) == ref


def test_fuse_init_components():
    k = compile_wave(1).kernels["Init"][0]
    parts = fission(k, [[o] for o in k.writes])
    assert canonical(fuse(parts, "Init")) == canonical(k)


def test_fuse_rhs_with_energy_accepted():
    c = compile_wave(3)
    fused = fuse([c.kernels["RHS"][0], c.kernels["Energy"][0]])
    assert set(fused.writes) == {"dt_u", "dt_rho", "dt_v1", "dt_v2", "dt_v3", "eps"}


def test_fuse_refuses_read_after_write():
    c = compile_wave(1)
    with pytest.raises(errors.FusionDependenceViolation):
        fuse([c.kernels["Init"][0], c.kernels["RHS"][0]])
    with pytest.raises(errors.FusionDependenceViolation):
        fuse([c.kernels["RHS"][0], c.kernels["Init"][0]])


def test_fused_temps_renamed_uniquely():
    a = Load("a", (0,))
    k1 = KernelIR("k1", 1, (Assign("t0", Mul(a, a), False), Assign("x", Temp("t0"))))
    k2 = KernelIR("k2", 1, (Assign("t0", Add(a, a), False), Assign("y", Temp("t0"))))
    f = fuse([k1, k2])
    assert f.temps == ("t0", "t1")
    env = {("a", (0,)): 3.0}
    assert interpret(f, env) == {"x": 9.0, "y": 6.0}


def test_split_kernels_interpret_like_original():
    rng = random.Random(3)
    k = compile_wave(3, 2).kernels["RHS"][0]
    for _ in range(20):
        parts = fission(k, random_partition(k.writes, rng))
        env = random_env([k], rng)
        merged = {}
        for p in parts:
            merged.update(interpret(p, env))
        assert merged == interpret(k, env)


def test_auto_partition_bounds_size():
    k = compile_wave(3, 2).kernels["RHS"][0]
    cells = auto_partition(k, 2)
    assert sorted(o for c in cells for o in c) == sorted(k.writes)
    for p in fission(k, cells):
        assert len(p.body) <= 2 or len(p.writes) == 1
