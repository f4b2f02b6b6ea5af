"""OpenQASM 2.0 emission and the matching reader.

The emitted dialect is the exact gate subset the rest of the package uses
(h, x, u3, cx, cu3, measure, plus qreg/creg declarations) with numeric
literals only — no pi-expressions.  ``read_qasm`` accepts exactly that
subset and is the structural inverse of ``export_qasm`` on it.
"""

from __future__ import annotations

import re
from typing import Mapping

from .circuit import Circuit, GateOp, UnboundParameterError, slot_parameter


class QasmParseError(ValueError):
    """Raised on text outside the emitted subset; message names the line."""


def _fmt(x: float) -> str:
    # shortest round-trip repr, integers without the trailing ".0"
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def export_qasm(circuit: Circuit, bindings: Mapping[str, float] | None = None) -> str:
    """Emit OpenQASM 2.0 text; deterministic byte-for-byte for equal input.

    Symbolic circuits must come with complete ``bindings``.
    """
    if bindings is not None:
        circuit = circuit.bind(bindings)
    else:
        for op in circuit.ops:
            for slot in op.params:
                p = slot_parameter(slot)
                if p is not None:
                    raise UnboundParameterError(
                        f"cannot export symbolic circuit: parameter {p.name!r} "
                        "is unbound (pass bindings)")

    lines = ['OPENQASM 2.0;', 'include "qelib1.inc";']
    regs = sorted(circuit.registers.items(), key=lambda kv: kv[1].start)
    index_of = {}
    for name, rng in regs:
        lines.append(f"qreg {name}[{len(rng)}];")
        for off, q in enumerate(rng):
            index_of[q] = f"{name}[{off}]"
    if circuit.measurements:
        creg_size = max(c for _, c in circuit.measurements) + 1
        lines.append(f"creg {circuit.creg_name}[{creg_size}];")
    for op in circuit.ops:
        if op.params:
            args = ",".join(_fmt(float(s)) for s in op.params)
            head = f"{op.kind}({args})"
        else:
            head = op.kind
        operands = ",".join(index_of[q] for q in op.qubits)
        lines.append(f"{head} {operands};")
    for qubit, clbit in circuit.measurements:
        lines.append(f"measure {index_of[qubit]} -> {circuit.creg_name}[{clbit}];")
    return "\n".join(lines) + "\n"


_QREG = re.compile(r"^qreg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[(\d+)\]\s*;$")
_CREG = re.compile(r"^creg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[(\d+)\]\s*;$")
_PLAIN = re.compile(r"^(h|x|cx)\s+(.+);$")
_PARAM = re.compile(r"^(u3|cu3)\s*\(([^)]*)\)\s+(.+);$")
_MEASURE = re.compile(
    r"^measure\s+(\w+)\s*\[(\d+)\]\s*->\s*(\w+)\s*\[(\d+)\]\s*;$")
_OPERAND = re.compile(r"^(\w+)\s*\[(\d+)\]$")


class _Reader:
    def __init__(self, text: str):
        self.registers: dict[str, range] = {}
        self.num_qubits = 0
        self.ops: list[GateOp] = []
        self.measurements: list[tuple[int, int]] = []
        self.creg: tuple[str, int] | None = None
        self.saw_header = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("//", 1)[0].strip()
            if not line:
                continue
            self._statement(line, lineno)
        if not self.saw_header:
            raise QasmParseError("line 1: missing 'OPENQASM 2.0;' header")

    def _fail(self, lineno: int, why: str):
        raise QasmParseError(f"line {lineno}: {why}")

    def _qubit(self, operand: str, lineno: int) -> int:
        m = _OPERAND.match(operand.strip())
        if not m:
            self._fail(lineno, f"malformed operand {operand.strip()!r}")
        name, off = m.group(1), int(m.group(2))
        rng = self.registers.get(name)
        if rng is None:
            self._fail(lineno, f"unknown quantum register {name!r}")
        if off >= len(rng):
            self._fail(lineno, f"index {off} out of range for {name}[{len(rng)}]")
        return rng.start + off

    def _angles(self, text: str, lineno: int, want: int) -> tuple[float, ...]:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != want:
            self._fail(lineno, f"expected {want} angle arguments, got {len(parts)}")
        vals = []
        for p in parts:
            try:
                vals.append(float(p))
            except ValueError:
                self._fail(lineno, f"bad angle literal {p!r}")
        return tuple(vals)

    def _statement(self, line: str, lineno: int):
        if line == "OPENQASM 2.0;":
            self.saw_header = True
            return
        if line.startswith("include"):
            return
        m = _QREG.match(line)
        if m:
            name, size = m.group(1), int(m.group(2))
            if name in self.registers:
                self._fail(lineno, f"duplicate quantum register {name!r}")
            self.registers[name] = range(self.num_qubits, self.num_qubits + size)
            self.num_qubits += size
            return
        m = _CREG.match(line)
        if m:
            if self.creg is not None:
                self._fail(lineno, "multiple classical registers")
            self.creg = (m.group(1), int(m.group(2)))
            return
        m = _PLAIN.match(line)
        if m:
            kind, operands = m.group(1), m.group(2).split(",")
            qubits = tuple(self._qubit(o, lineno) for o in operands)
            try:
                self.ops.append(GateOp(kind, qubits))
            except ValueError as e:
                self._fail(lineno, str(e))
            return
        m = _PARAM.match(line)
        if m:
            kind, angles, operands = m.group(1), m.group(2), m.group(3).split(",")
            params = self._angles(angles, lineno, 3)
            qubits = tuple(self._qubit(o, lineno) for o in operands)
            try:
                self.ops.append(GateOp(kind, qubits, params))
            except ValueError as e:
                self._fail(lineno, str(e))
            return
        m = _MEASURE.match(line)
        if m:
            qubit = self._qubit(f"{m.group(1)}[{m.group(2)}]", lineno)
            cname, cbit = m.group(3), int(m.group(4))
            if self.creg is None or cname != self.creg[0]:
                self._fail(lineno, f"unknown classical register {cname!r}")
            if cbit >= self.creg[1]:
                self._fail(lineno, f"classical bit {cbit} out of range")
            self.measurements.append((qubit, cbit))
            return
        word = line.split("(")[0].split()[0].rstrip(";")
        self._fail(lineno, f"unsupported instruction {word!r}")


def read_qasm(text: str) -> Circuit:
    """Parse text in the emitted subset back into a Circuit."""
    r = _Reader(text)
    circuit = Circuit(r.num_qubits, r.registers if r.registers else None,
                      creg_name=r.creg[0] if r.creg else "c")
    circuit.ops = r.ops
    circuit.measurements = r.measurements
    return circuit
