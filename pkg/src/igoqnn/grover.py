"""Reference Grover search over a binary-indexed database.

Fragments are plain :class:`~igoqnn.circuit.Circuit` values built from the
h/x/u3/cx/cu3 gate set only.  Multi-controlled phases are decomposed
recursively without ancilla qubits, so every fragment stays on exactly the
n index qubits.  All phase constructions are exact (no stray global phases):
``diffuser(n)`` ends with a u3(2*pi, 0, 0) gate because the textbook
H/X/multi-controlled-Z/X/H sandwich realizes -(2|s><s| - I); the extra gate
restores the reflection itself, so the fragment's matrix equals
2|s><s| - I entrywise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .statevector import StateVector, new_zero_state


@dataclass(frozen=True)
class MarkedSet:
    """The solution indices of an n-qubit search space."""

    n_index_qubits: int
    marked: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "marked", frozenset(self.marked))
        size = 1 << self.n_index_qubits
        if not self.marked:
            raise ValueError("marked set must be non-empty")
        if any(not 0 <= w < size for w in self.marked):
            raise ValueError(f"marked indices must lie in [0, {size})")
        if len(self.marked) >= size:
            raise ValueError("marked set must not cover the whole space")

    @property
    def num_entries(self) -> int:
        return 1 << self.n_index_qubits


def uniform_superposition(n: int) -> Circuit:
    """H on each qubit: |0..0> -> equal amplitudes 1/sqrt(2^n)."""
    if n < 1:
        raise ValueError(f"need at least 1 qubit, got {n}")
    c = Circuit(n)
    for q in range(n):
        c.h(q)
    return c


def _mcp(circuit: Circuit, beta: float, qubits: list[int]):
    # phase e^{i beta} on the branch where all `qubits` are 1, exactly:
    #   mcp(b, [.., a, t]) = cp(b/2)(a,t) . mcx(rest->a) . cp(-b/2)(a,t)
    #                        . mcx(rest->a) . mcp(b/2, rest+[t])
    if len(qubits) == 1:
        circuit.u3(qubits[0], 0.0, 0.0, beta)
        return
    if len(qubits) == 2:
        circuit.cu3(qubits[0], qubits[1], 0.0, 0.0, beta)
        return
    *rest, a, t = qubits
    circuit.cu3(a, t, 0.0, 0.0, beta / 2.0)
    _mcx(circuit, rest, a)
    circuit.cu3(a, t, 0.0, 0.0, -beta / 2.0)
    _mcx(circuit, rest, a)
    _mcp(circuit, beta / 2.0, rest + [t])


def _mcx(circuit: Circuit, controls: list[int], target: int):
    if len(controls) == 1:
        circuit.cx(controls[0], target)
        return
    circuit.h(target)
    _mcp(circuit, math.pi, list(controls) + [target])
    circuit.h(target)


def multi_controlled_x(controls: list[int], target: int, num_qubits: int) -> Circuit:
    """Ancilla-free multi-controlled X as a fragment on ``num_qubits`` qubits."""
    if not controls:
        raise ValueError("need at least one control")
    c = Circuit(num_qubits)
    _mcx(c, list(controls), target)
    return c


def phase_oracle(marked: MarkedSet) -> Circuit:
    """|x> -> -|x> exactly for x in the marked set, identity elsewhere."""
    n = marked.n_index_qubits
    c = Circuit(n)
    for w in sorted(marked.marked):
        zeros = [q for q in range(n) if not (w >> q) & 1]
        for q in zeros:
            c.x(q)
        _mcp(c, math.pi, list(range(n)))
        for q in zeros:
            c.x(q)
    return c


def diffuser(n: int) -> Circuit:
    """The reflection 2|s><s| - I about the uniform superposition, exactly."""
    if n < 1:
        raise ValueError(f"need at least 1 qubit, got {n}")
    c = Circuit(n)
    for q in range(n):
        c.h(q)
    for q in range(n):
        c.x(q)
    _mcp(c, math.pi, list(range(n)))
    for q in range(n):
        c.x(q)
    for q in range(n):
        c.h(q)
    c.u3(0, 2.0 * math.pi, 0.0, 0.0)  # cancel the sandwich's global -1
    return c


def optimal_iterations(num_entries: int, num_marked: int) -> int:
    """floor((pi/4) * sqrt(N/M)), clamped to at least 1."""
    if not 1 <= num_marked < num_entries:
        raise ValueError(
            f"need 1 <= num_marked < num_entries, got {num_marked}/{num_entries}")
    return max(1, math.floor(math.pi / 4.0 * math.sqrt(num_entries / num_marked)))


def analytic_success_probability(num_entries: int, num_marked: int,
                                 iterations: int) -> float:
    """sin^2((2k+1) * asin(sqrt(M/N))) — the closed-form rotation angle."""
    theta = math.asin(math.sqrt(num_marked / num_entries))
    return math.sin((2 * iterations + 1) * theta) ** 2


def success_probability(state: StateVector, marked: MarkedSet) -> float:
    amps = state.amps
    return float(sum(abs(amps[w]) ** 2 for w in marked.marked))


def grover_search(marked: MarkedSet,
                  iterations: int | None = None) -> tuple[StateVector, float]:
    """Run superposition + k x (oracle, diffuser); k defaults to the optimum.

    Returns the final state and the total probability mass on marked indices.
    """
    n = marked.n_index_qubits
    if iterations is None:
        iterations = optimal_iterations(marked.num_entries, len(marked.marked))
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    state = uniform_superposition(n).run(new_zero_state(n))
    if iterations:
        step = Circuit(n)
        step.extend(phase_oracle(marked))
        step.extend(diffuser(n))
        prog = step.compile()
        from .statevector import run_program
        for _ in range(iterations):
            run_program(state.amps, prog.kinds, prog.qubits0, prog.qubits1,
                        prog.mats, 0, len(prog))
    return state, success_probability(state, marked)
