"""OpenQASM 2.0 emitter/reader: round-trip structural identity on random
circuits (the reader is the emitter's inverse on the emitted subset), exact
emission text, and parse failures that name their line."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igoqnn.circuit import Circuit, Parameter, UnboundParameterError
from igoqnn.qasm import QasmParseError, export_qasm, read_qasm

from conftest import random_circuit


# -- round trip -----------------------------------------------------------

angles = st.floats(min_value=-10.0, max_value=10.0,
                   allow_nan=False, allow_infinity=False)


@st.composite
def circuits(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    c = Circuit(n)
    for _ in range(draw(st.integers(min_value=0, max_value=25))):
        kind = draw(st.sampled_from(
            ["h", "x", "u3", "cx", "cu3"] if n > 1 else ["h", "x", "u3"]))
        q = draw(st.integers(min_value=0, max_value=n - 1))
        if kind in ("cx", "cu3"):
            t = draw(st.integers(min_value=0, max_value=n - 1)
                     .filter(lambda x: x != q))
            if kind == "cx":
                c.cx(q, t)
            else:
                c.cu3(q, t, draw(angles), draw(angles), draw(angles))
        elif kind == "u3":
            c.u3(q, draw(angles), draw(angles), draw(angles))
        else:
            getattr(c, kind)(q)
    if draw(st.booleans()):
        c.measure(draw(st.integers(min_value=0, max_value=n - 1)), 0)
    return c


@settings(max_examples=80, deadline=None)
@given(circuits())
def test_roundtrip_structural_identity(c):
    assert read_qasm(export_qasm(c)) == c


def test_roundtrip_named_registers(rng):
    c = Circuit(4, registers={"alpha": range(0, 1), "beta": range(1, 4)})
    c.h(0)
    c.cu3(3, 0, 0.25, -1.5, 2.0)
    c.measure(2, 0)
    c.measure(0, 1)
    back = read_qasm(export_qasm(c))
    assert back == c
    assert back.registers == {"alpha": range(0, 1), "beta": range(1, 4)}


def test_roundtrip_is_emission_stable(rng):
    for _ in range(10):
        c = random_circuit(rng, 4, 20)
        text = export_qasm(c)
        assert export_qasm(read_qasm(text)) == text


# -- emission -------------------------------------------------------------

def test_exact_emission_text():
    c = Circuit(2, registers={"q": range(0, 2)})
    c.h(0)
    c.u3(1, 0.5, 0.0, -0.25)
    c.cx(0, 1)
    c.measure(1, 0)
    assert export_qasm(c) == (
        'OPENQASM 2.0;\n'
        'include "qelib1.inc";\n'
        'qreg q[2];\n'
        'creg c[1];\n'
        'h q[0];\n'
        'u3(0.5,0,-0.25) q[1];\n'
        'cx q[0],q[1];\n'
        'measure q[1] -> c[0];\n')


def test_export_binds_symbolic_parameters():
    c = Circuit(1)
    c.u3(0, Parameter("w"), 0.0, 0.0)
    with pytest.raises(UnboundParameterError, match="w"):
        export_qasm(c)
    text = export_qasm(c, bindings={"w": 1.25})
    assert "u3(1.25,0,0)" in text


def test_creg_sized_by_max_clbit():
    c = Circuit(1)
    c.measure(0, 4)
    assert "creg c[5];" in export_qasm(c)


def test_float_repr_roundtrips_exactly():
    c = Circuit(1)
    c.u3(0, 1 / 3, math.pi, -1e-17)
    back = read_qasm(export_qasm(c))
    assert back.ops[0].params == (1 / 3, math.pi, -1e-17)


# -- parsing --------------------------------------------------------------

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def test_headers_only_is_empty_circuit():
    c = read_qasm(HEADER)
    assert c.num_qubits == 0
    assert c.ops == []


def test_missing_header():
    with pytest.raises(QasmParseError, match="line 1"):
        read_qasm("qreg q[1];\n")


def test_unsupported_instruction_names_line():
    text = HEADER + "qreg q[2];\ncz q[0],q[1];\n"
    with pytest.raises(QasmParseError, match="line 4"):
        read_qasm(text)


def test_unknown_register():
    with pytest.raises(QasmParseError, match="line 4"):
        read_qasm(HEADER + "qreg q[1];\nh r[0];\n")


def test_index_out_of_range():
    with pytest.raises(QasmParseError, match="line 4"):
        read_qasm(HEADER + "qreg q[1];\nh q[3];\n")


def test_duplicate_qreg():
    with pytest.raises(QasmParseError, match="line 4"):
        read_qasm(HEADER + "qreg q[1];\nqreg q[2];\n")


def test_second_creg_rejected():
    with pytest.raises(QasmParseError, match="line 5"):
        read_qasm(HEADER + "qreg q[1];\ncreg c[1];\ncreg d[1];\n")


def test_bad_angle():
    with pytest.raises(QasmParseError, match="line 4"):
        read_qasm(HEADER + "qreg q[1];\nu3(zz,0,0) q[0];\n")


def test_comments_and_blank_lines_skipped():
    text = ('// emitted by hand\n' + HEADER
            + '\nqreg q[2];\n// entangle\ncx q[0],q[1]; // trailing\n')
    c = read_qasm(text)
    assert [op.kind for op in c.ops] == ["cx"]


def test_reader_accepts_scientific_notation():
    c = read_qasm(HEADER + "qreg q[1];\nu3(1e-3,-2.5e2,0.0) q[0];\n")
    assert c.ops[0].params == (1e-3, -250.0, 0.0)
