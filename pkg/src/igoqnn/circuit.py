"""Parameterized circuit IR: gates, symbolic parameters, binding, inversion.

A circuit is an ordered gate list over ``num_qubits`` qubits plus an optional
named-register layout and trailing measurements.  Gate parameter slots hold
either a literal float (radians) or a symbolic :class:`Parameter` (possibly
negated — inversion negates slots symbolically, so an inverted fragment stays
trainable and tracks the same parameter).

Gate kinds are the emitted OpenQASM subset: h, x, u3, cx, cu3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

from .statevector import (
    H_MATRIX,
    OP_1Q,
    OP_C1Q,
    X_MATRIX,
    StateVector,
    new_zero_state,
    run_program,
    u3_matrix,
)


class UnboundParameterError(Exception):
    """A symbolic slot had no value in the supplied bindings."""


@dataclass(frozen=True)
class Parameter:
    """A named free parameter (the label is the identity)."""

    name: str

    def __neg__(self) -> "ParamExpr":
        return ParamExpr(self, -1.0)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r})"


@dataclass(frozen=True)
class ParamExpr:
    """A parameter scaled by +/-1; produced by negation during inversion."""

    parameter: Parameter
    sign: float

    def __neg__(self) -> Union[Parameter, "ParamExpr"]:
        if self.sign < 0:
            return self.parameter
        return ParamExpr(self.parameter, -self.sign)


Slot = Union[float, Parameter, ParamExpr]


def slot_parameter(slot: Slot) -> Parameter | None:
    """The Parameter behind a slot, or None for a literal."""
    if isinstance(slot, Parameter):
        return slot
    if isinstance(slot, ParamExpr):
        return slot.parameter
    return None


def slot_sign(slot: Slot) -> float:
    return slot.sign if isinstance(slot, ParamExpr) else 1.0


def resolve_slot(slot: Slot, bindings: Mapping[str, float]) -> float:
    """Literal value of a slot under ``bindings`` (keyed by parameter name)."""
    p = slot_parameter(slot)
    if p is None:
        return float(slot)
    try:
        return slot_sign(slot) * float(bindings[p.name])
    except KeyError:
        raise UnboundParameterError(f"no binding for parameter {p.name!r}") from None


def _negate_slot(slot: Slot) -> Slot:
    if isinstance(slot, (Parameter, ParamExpr)):
        return -slot
    return -float(slot)


# kind -> (num qubits, num param slots)
_ARITY = {"h": (1, 0), "x": (1, 0), "u3": (1, 3), "cx": (2, 0), "cu3": (2, 3)}


@dataclass(frozen=True)
class GateOp:
    """One gate: kind, qubit operands, parameter slots."""

    kind: str
    qubits: tuple[int, ...]
    params: tuple[Slot, ...] = ()

    def __post_init__(self):
        try:
            nq, np_ = _ARITY[self.kind]
        except KeyError:
            raise ValueError(f"unknown gate kind {self.kind!r}") from None
        if len(self.qubits) != nq:
            raise ValueError(
                f"{self.kind} takes {nq} qubit(s), got {len(self.qubits)}")
        if len(self.params) != np_:
            raise ValueError(
                f"{self.kind} takes {np_} parameter slot(s), got {len(self.params)}")
        if nq == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(
                f"{self.kind} control equals target (qubit {self.qubits[0]})")

    def adjoint(self) -> "GateOp":
        # u3(t,p,l)^dagger = u3(-t,-l,-p): note the phi/lambda swap.
        if self.kind in ("u3", "cu3"):
            t, p, l = self.params
            return GateOp(self.kind, self.qubits,
                          (_negate_slot(t), _negate_slot(l), _negate_slot(p)))
        return self  # h, x, cx are self-inverse


class Circuit:
    """Ordered gate sequence with named registers and trailing measurements.

    Registers map name -> contiguous qubit range; ranges must be disjoint and
    together cover all qubits.  Measurements pair a qubit with a classical bit
    in a single classical register (``creg_name``).  Library code treats built
    circuits as frozen values.
    """

    def __init__(self, num_qubits: int,
                 registers: Mapping[str, range] | None = None,
                 creg_name: str = "c"):
        if num_qubits < 0:
            raise ValueError(f"num_qubits must be >= 0, got {num_qubits}")
        if registers is None:
            registers = {"q": range(num_qubits)} if num_qubits else {}
        covered = sorted(i for r in registers.values() for i in r)
        if covered != list(range(num_qubits)):
            raise ValueError("register ranges must be disjoint and cover "
                             f"all {num_qubits} qubits")
        self.num_qubits = num_qubits
        self.registers: dict[str, range] = dict(registers)
        self.ops: list[GateOp] = []
        self.measurements: list[tuple[int, int]] = []  # (qubit, classical bit)
        self.creg_name = creg_name

    # -- construction -----------------------------------------------------

    def append(self, op: GateOp) -> "Circuit":
        for q in op.qubits:
            if not 0 <= q < self.num_qubits:
                raise IndexError(
                    f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        self.ops.append(op)
        return self

    def extend(self, ops: Union["Circuit", Iterable[GateOp]]) -> "Circuit":
        if isinstance(ops, Circuit):
            ops = ops.ops
        for op in ops:
            self.append(op)
        return self

    def h(self, q: int) -> "Circuit":
        return self.append(GateOp("h", (q,)))

    def x(self, q: int) -> "Circuit":
        return self.append(GateOp("x", (q,)))

    def u3(self, q: int, theta: Slot, phi: Slot, lam: Slot) -> "Circuit":
        return self.append(GateOp("u3", (q,), (theta, phi, lam)))

    def cx(self, control: int, target: int) -> "Circuit":
        return self.append(GateOp("cx", (control, target)))

    def cu3(self, control: int, target: int,
            theta: Slot, phi: Slot, lam: Slot) -> "Circuit":
        return self.append(GateOp("cu3", (control, target), (theta, phi, lam)))

    def measure(self, qubit: int, clbit: int) -> "Circuit":
        if not 0 <= qubit < self.num_qubits:
            raise IndexError(f"qubit {qubit} out of range")
        self.measurements.append((qubit, clbit))
        return self

    # -- structure --------------------------------------------------------

    def parameters(self) -> list[Parameter]:
        """Parameter inventory, in first-appearance order."""
        seen: dict[str, Parameter] = {}
        for op in self.ops:
            for slot in op.params:
                p = slot_parameter(slot)
                if p is not None and p.name not in seen:
                    seen[p.name] = p
        return list(seen.values())

    def _clone_empty(self) -> "Circuit":
        return Circuit(self.num_qubits, self.registers, self.creg_name)

    def copy(self) -> "Circuit":
        c = self._clone_empty()
        c.ops = list(self.ops)
        c.measurements = list(self.measurements)
        return c

    def inverse(self) -> "Circuit":
        """Reversed adjoint gate sequence; measurements are not carried over."""
        c = self._clone_empty()
        c.ops = [op.adjoint() for op in reversed(self.ops)]
        return c

    def bind(self, bindings: Mapping[str, float]) -> "Circuit":
        """Replace every symbolic slot with its bound literal value."""
        c = self._clone_empty()
        c.measurements = list(self.measurements)
        for op in self.ops:
            if op.params and any(slot_parameter(s) is not None for s in op.params):
                vals = tuple(resolve_slot(s, bindings) for s in op.params)
                c.ops.append(GateOp(op.kind, op.qubits, vals))
            else:
                c.ops.append(op)
        return c

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.num_qubits == other.num_qubits
                and self.ops == other.ops
                and {k: (r.start, r.stop) for k, r in self.registers.items()}
                == {k: (r.start, r.stop) for k, r in other.registers.items()}
                and self.measurements == other.measurements
                and (self.creg_name == other.creg_name
                     or not self.measurements))

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __repr__(self) -> str:
        return (f"<Circuit {self.num_qubits} qubits, {len(self.ops)} ops, "
                f"{len(self.parameters())} params>")

    # -- execution ----------------------------------------------------------

    def compile(self, dtype=np.complex128) -> "Program":
        """Lower a fully literal circuit to flat arrays for the jitted runner."""
        return compile_program(self, dtype=dtype)

    def run(self, state: StateVector | None = None) -> StateVector:
        """Apply all gates in order; measurements are ignored (exact mode)."""
        if state is None:
            state = new_zero_state(self.num_qubits, dtype=np.complex128)
        elif state.num_qubits != self.num_qubits:
            raise ValueError(
                f"state has {state.num_qubits} qubits, circuit {self.num_qubits}")
        prog = self.compile(dtype=state.amps.dtype)
        run_program(state.amps, prog.kinds, prog.qubits0, prog.qubits1,
                    prog.mats, 0, len(prog))
        return state


def gate_matrix(op: GateOp, dtype=np.complex128) -> np.ndarray:
    """The 2x2 payload matrix of a literal gate (the controlled payload for
    cx/cu3)."""
    if op.kind == "h":
        m = H_MATRIX
    elif op.kind in ("x", "cx"):
        m = X_MATRIX
    else:  # u3 / cu3
        for s in op.params:
            if slot_parameter(s) is not None:
                raise UnboundParameterError(
                    f"gate {op.kind} has unbound parameter "
                    f"{slot_parameter(s).name!r}")
        m = u3_matrix(*(float(s) for s in op.params))
    return m.astype(dtype)


@dataclass
class Program:
    """A literal circuit lowered to flat arrays (see statevector.run_program)."""

    kinds: np.ndarray    # int8, OP_1Q / OP_C1Q
    qubits0: np.ndarray  # int64: target (1q) or control (controlled)
    qubits1: np.ndarray  # int64: -1 (1q) or target (controlled)
    mats: np.ndarray     # complex (G, 4): row-major 2x2 payloads
    num_qubits: int = 0

    def __len__(self) -> int:
        return self.kinds.shape[0]


def compile_program(circuit: Circuit, dtype=np.complex128) -> Program:
    n = len(circuit.ops)
    kinds = np.empty(n, dtype=np.int8)
    q0 = np.empty(n, dtype=np.int64)
    q1 = np.empty(n, dtype=np.int64)
    mats = np.empty((n, 4), dtype=dtype)
    for g, op in enumerate(circuit.ops):
        if op.kind in ("cx", "cu3"):
            kinds[g] = OP_C1Q
            q0[g], q1[g] = op.qubits
        else:
            kinds[g] = OP_1Q
            q0[g] = op.qubits[0]
            q1[g] = -1
        mats[g] = gate_matrix(op, dtype=dtype).reshape(4)
    return Program(kinds, q0, q1, mats, circuit.num_qubits)
