import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edlc import errors
from edlc.expand import Expander, canonicalize_derivative, check_indices, variable_components
from edlc.frontend import load
from edlc.ir.kernel import evaluate
from edlc.ir.nodes import PD, Add, Param, Var, transform, walk


def program(groups: str, calcs: str, derivs: bool = True):
    d = "begin derivatives\n D_i = FiniteDifferencingOperator[1,1,i]\nend derivatives\n" if derivs else ""
    return load(groups + calcs + d, "t.edl")


VECTORS = 'begin group Evolved\n a_i: ""\n b_i: ""\n rho: ""\nend group\nbegin group Extra\n s: ""\n T_ij: ""\n H_ij: "" symmetric\n w_i: ""\nend group\n'


def rhs_strings(assignments):
    return [str(a) for a in assignments]


def test_check_indices_wave(wave_program):
    rhs = wave_program.calculation("RHS").equations
    assert set(check_indices(rhs[2]).free) == {"i"}
    report = check_indices(rhs[1])
    assert report.free == {} and report.dummy == {"i", "j"}


def test_free_index_mismatch_span():
    src = 'begin group Evolved\n rho: ""\n v_i: ""\nend group\nbegin calculation RHS\n D_t rho = v_i\n D_t v_i = 0\nend calculation\n'
    p = load(src, "t.edl")
    with pytest.raises(errors.FreeIndexMismatch) as e:
        Expander(p, 3).expand_calculation(p.calculations[0])
    assert e.value.span.line_start == 6


def test_index_tripled():
    p = program(VECTORS, "begin calculation C\n s = a_i a_i b_i\nend calculation\n")
    with pytest.raises(errors.IndexTripled):
        Expander(p, 3).expand_calculation(p.calculations[0])


def test_wave_rhs_dim3(wave_program):
    out = Expander(wave_program, 3).expand_calculation(wave_program.calculation("RHS"))
    assert rhs_strings(out) == [
        "dt_u = rho",
        "dt_rho = PD(v1,1) + PD(v2,2) + PD(v3,3)",
        "dt_v1 = PD(rho,1)",
        "dt_v2 = PD(rho,2)",
        "dt_v3 = PD(rho,3)",
    ]


def test_wave_rhs_dim1(wave_program):
    out = Expander(wave_program, 1).expand_calculation(wave_program.calculation("RHS"))
    assert rhs_strings(out) == ["dt_u = rho", "dt_rho = PD(v1,1)", "dt_v1 = PD(rho,1)"]


def test_vector_gradient_expansion():
    p = program(VECTORS, "begin calculation C\n w_i = D_i rho\nend calculation\n")
    out = Expander(p, 3).expand_calculation(p.calculations[0])
    assert rhs_strings(out) == ["w1 = PD(rho,1)", "w2 = PD(rho,2)", "w3 = PD(rho,3)"]


def test_energy_dim3(wave_program):
    (a,) = Expander(wave_program, 3).expand_calculation(wave_program.calculation("Energy"))
    assert str(a) == "eps = 1/2*(rho**2 + (v1*v1 + v2*v2 + v3*v3))"


def test_init_dim1(wave_program):
    out = Expander(wave_program, 1).expand_calculation(wave_program.calculation("Init"))
    assert rhs_strings(out) == ["u = 0", "rho = A*exp(-(1/2*(sqrt(x**2)/W)**2))", "v1 = 0"]


def test_canonicalize_derivative():
    assert canonicalize_derivative(PD("rho", (2, 1))) == PD("rho", (1, 2))
    assert canonicalize_derivative(PD("rho", (1, 1))) == PD("rho", (1, 1))


def test_six_distinct_second_derivatives():
    forms = {canonicalize_derivative(PD("rho", (i, j))) for i in (1, 2, 3) for j in (1, 2, 3)}
    assert len(forms) == 6
    p = program(VECTORS, "begin calculation C\n T_ij = D_i D_j rho\nend calculation\n")
    out = Expander(p, 3).expand_calculation(p.calculations[0])
    assert len(out) == 9
    assert len({a.rhs for a in out}) == 6
    assert all(n.axes == tuple(sorted(n.axes)) for a in out for n in walk(a.rhs) if isinstance(n, PD))


def test_symmetric_entry_emits_upper_triangle():
    p = program(VECTORS, "begin calculation C\n H_ij = D_i D_j rho\nend calculation\n")
    out = Expander(p, 3).expand_calculation(p.calculations[0])
    assert [a.target for a in out] == ["H11", "H12", "H13", "H22", "H23", "H33"]
    entry = p.groups[1].entries[2]
    assert variable_components(entry, 3) == ["H11", "H12", "H13", "H22", "H23", "H33"]


def test_duplicate_component_target():
    with pytest.raises(errors.DuplicateTarget):
        program(VECTORS, "begin calculation C\n w_i = a_i\n w_i = b_i\nend calculation\n")
    p = program(VECTORS, "begin calculation C\n w_i = a_i\n w_j = b_j\nend calculation\n")
    with pytest.raises(errors.DuplicateComponentTarget) as e:
        Expander(p, 3).expand_calculation(p.calculations[0])
    assert e.value.span.line_start == 14


def test_nonlinear_derivative_rejected():
    p = program(VECTORS, "begin calculation C\n w_i = D_i (rho rho)\nend calculation\n")
    with pytest.raises(errors.UnsupportedDerivative):
        Expander(p, 2).expand_calculation(p.calculations[0])


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("lhs,rhs,free", [("s", "rho", 0), ("w_i", "a_i", 1), ("T_ij", "a_i b_j", 2), ("w_i", "D_i rho", 1)])
def test_expansion_count(dim, lhs, rhs, free):
    p = program(VECTORS, f"begin calculation C\n {lhs} = {rhs}\nend calculation\n")
    out = Expander(p, dim).expand_calculation(p.calculations[0])
    assert len(out) == dim**free


def _numeric(node, values):
    as_params = transform(node, lambda n: Param(n.name) if isinstance(n, Var) else n)
    return evaluate(as_params, values, {})


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_delta_contraction_is_dot_product(dim, vals):
    p = program(VECTORS, "begin calculation C\n s = delta^ij a_i b_j\nend calculation\n")
    (a,) = Expander(p, dim).expand_calculation(p.calculations[0])
    env = {f"a{k}": vals[k - 1] for k in range(1, 4)}
    env.update({f"b{k}": vals[k + 2] for k in range(1, 4)})
    expected = sum(env[f"a{k}"] * env[f"b{k}"] for k in range(1, dim + 1))
    assert _numeric(a.rhs, env) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_relabeling_invariance(dim):
    a = program(VECTORS, "begin calculation C\n s = delta^ij a_i b_j\n w_i = delta^jk a_j b_k a_i\nend calculation\n")
    b = program(VECTORS, "begin calculation C\n s = delta^ik a_i b_k\n w_i = delta^mn a_m b_n a_i\nend calculation\n")
    ea = Expander(a, dim).expand_calculation(a.calculations[0])
    eb = Expander(b, dim).expand_calculation(b.calculations[0])
    assert [(x.target, x.rhs) for x in ea] == [(y.target, y.rhs) for y in eb]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_canonicalize_idempotent(axes):
    once = canonicalize_derivative(PD("f", tuple(axes)))
    assert canonicalize_derivative(once) == once
    assert list(once.axes) == sorted(axes)


def test_broadcast_scalar_fills_components(wave_program):
    out = Expander(wave_program, 3).expand_calculation(wave_program.calculation("Init"))
    assert [a.target for a in out] == ["u", "rho", "v1", "v2", "v3"]


def test_coordinate_beyond_dim_rejected():
    p = program(VECTORS, "begin calculation C\n s = z\nend calculation\n")
    with pytest.raises(errors.RankMismatch):
        Expander(p, 2).expand_calculation(p.calculations[0])
