"""The trainable Grover-oracle network: registers, fragments, builder, propagation.

Layout (qubit 0 = least significant): ``input`` channels first, then
``output``, then hidden layers shallowest-to-deepest (register ``hidden1``
is adjacent to the output register, ``hidden{L}`` is the deepest layer —
``hidden_widths`` is given deepest-first), and one ``oracle`` qubit last.

The build sequence:

1. H on every hidden qubit and (by default) on the output register;
   X then H on the oracle qubit, preparing |-> for phase kickback.
2. One trainable U3 per hidden qubit (the neuron weights), plus any
   per-layer activation fragments.
3. Dense trainable entanglers between adjacent hidden layers, deepest first.
4. ceil(sqrt(N)) repetitions of: oracle generator (last hidden layer ->
   output), oracularizer (output -> input), oracle flagging (-> oracle
   qubit), the two inverses, diffuser over the output register.  Each
   repetition re-emits the same parameters.
5. Inverses of steps 3 and 2 (uncomputation of the hidden register).
6. Measurement of the output register into the classical ``hits`` register.

Synapse parameters are exactly the L1-regularized set; their labels start
with ``syn.``, neuron labels with ``neuron.``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit, GateOp, Parameter, Slot
from .grover import diffuser as _plain_diffuser
from .grover import multi_controlled_x
from .statevector import DEFAULT_MAX_QUBITS, CapacityError, new_zero_state


class SynapseMode(str, Enum):
    # PAPER_LITERAL: trainable U3 on the control followed by a bare CX —
    # entangles even with nulled weights.  NULL_CONSISTENT: a single
    # controlled-U3, which is the identity at zero weights.
    PAPER_LITERAL = "paper_literal"
    NULL_CONSISTENT = "null_consistent"


class FlagMode(str, Enum):
    PARITY = "parity"            # CX from every source qubit into the oracle
    CONJUNCTION = "conjunction"  # multi-controlled X, fires on all-ones


@dataclass(frozen=True)
class NetworkShape:
    """N database channels and hidden layer widths, deepest layer first."""

    n_database: int
    hidden_widths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if self.n_database < 1:
            raise ValueError("n_database must be >= 1")
        if not self.hidden_widths:
            raise ValueError("need at least one hidden layer")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("every hidden width must be >= 1")


def qubit_budget(shape: NetworkShape) -> int:
    """2N + sum(hidden widths) + 1 (input, output, hidden layers, oracle)."""
    return 2 * shape.n_database + sum(shape.hidden_widths) + 1


@dataclass(frozen=True)
class RegisterLayout:
    num_qubits: int
    input: range
    output: range
    hidden: tuple[range, ...]  # hidden[0] = register hidden1 (shallowest)
    oracle: int

    def registers(self) -> dict[str, range]:
        regs = {"input": self.input, "output": self.output}
        for i, rng in enumerate(self.hidden, start=1):
            regs[f"hidden{i}"] = rng
        regs["oracle"] = range(self.oracle, self.oracle + 1)
        return regs

    def all_hidden(self) -> list[int]:
        return [q for rng in self.hidden for q in rng]


def make_layout(shape: NetworkShape) -> RegisterLayout:
    n = shape.n_database
    hidden = []
    start = 2 * n
    for width in reversed(shape.hidden_widths):  # shallowest first
        hidden.append(range(start, start + width))
        start += width
    return RegisterLayout(
        num_qubits=start + 1,
        input=range(0, n),
        output=range(n, 2 * n),
        hidden=tuple(hidden),
        oracle=start,
    )


def _fragment(layout: RegisterLayout) -> Circuit:
    return Circuit(layout.num_qubits, layout.registers(), creg_name="hits")


# -- fragments ------------------------------------------------------------


def encode_input(layout: RegisterLayout, database_bits: Sequence[int]) -> Circuit:
    """X on input qubit i exactly where bit i is 1 (bit 0 = channel 0)."""
    bits = tuple(int(b) for b in database_bits)
    if len(bits) != len(layout.input):
        raise ValueError(f"expected {len(layout.input)} database bits, "
                         f"got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("database bits must be 0/1")
    frag = _fragment(layout)
    for q, b in zip(layout.input, bits):
        if b:
            frag.x(q)
    return frag


def _neuron_params(reg_name: str, index: int) -> tuple[Parameter, ...]:
    return tuple(Parameter(f"neuron.{reg_name}.{index}.{c}")
                 for c in ("theta", "phi", "lam"))


def neuron_init(layout: RegisterLayout, layer: int, index: int,
                params: tuple[Slot, Slot, Slot] | None = None) -> Circuit:
    """One trainable U3 on hidden layer ``layer`` (1 = shallowest), neuron
    ``index``; fresh canonically-named parameters unless given."""
    rng = layout.hidden[layer - 1]
    if params is None:
        params = _neuron_params(f"hidden{layer}", index)
    frag = _fragment(layout)
    frag.u3(rng[index], *params)
    return frag


def _synapse_params(cname: str, ci: int, tname: str, ti: int) -> tuple[Parameter, ...]:
    return tuple(Parameter(f"syn.{cname}.{ci}.{tname}.{ti}.{c}")
                 for c in ("theta", "phi", "lam"))


def entangle_synapse(layout: RegisterLayout, control: int, target: int,
                     params: tuple[Slot, Slot, Slot],
                     mode: SynapseMode) -> Circuit:
    """A trainable coupling control -> target in the selected mode."""
    if control == target:
        raise ValueError(f"synapse control equals target (qubit {control})")
    frag = _fragment(layout)
    if mode == SynapseMode.PAPER_LITERAL:
        frag.u3(control, *params)
        frag.cx(control, target)
    else:
        frag.cu3(control, target, *params)
    return frag


def _dense_block(layout: RegisterLayout, controls: range, cname: str,
                 targets: range, tname: str, mode: SynapseMode) -> Circuit:
    # control-major, then target index
    frag = _fragment(layout)
    for ci, c in enumerate(controls):
        for ti, t in enumerate(targets):
            frag.extend(entangle_synapse(
                layout, c, t, _synapse_params(cname, ci, tname, ti), mode))
    return frag


def neural_entangler(layout: RegisterLayout, deeper_layer: int,
                     mode: SynapseMode) -> Circuit:
    """Dense synapses from hidden layer ``deeper_layer`` (controls) into the
    next-shallower layer ``deeper_layer - 1`` (targets)."""
    if not 2 <= deeper_layer <= len(layout.hidden):
        raise ValueError(f"no adjacent pair at layer {deeper_layer}")
    return _dense_block(layout,
                        layout.hidden[deeper_layer - 1], f"hidden{deeper_layer}",
                        layout.hidden[deeper_layer - 2], f"hidden{deeper_layer - 1}",
                        mode)


def oracle_generator(layout: RegisterLayout, mode: SynapseMode) -> Circuit:
    """Dense synapses, shallowest hidden layer (controls) -> output targets."""
    return _dense_block(layout, layout.hidden[0], "hidden1",
                        layout.output, "output", mode)


def oracularizer(layout: RegisterLayout, mode: SynapseMode) -> Circuit:
    """Dense synapses, output register (controls) -> input targets."""
    return _dense_block(layout, layout.output, "output",
                        layout.input, "input", mode)


def oracle_flagging(layout: RegisterLayout, flag_mode: FlagMode,
                    source: str = "input") -> Circuit:
    """Map the checker state onto the oracle qubit (prepared in |->).

    Parity kicks a -1 phase onto odd-weight source patterns; Conjunction
    onto the all-ones pattern only.
    """
    src = layout.input if source == "input" else layout.output
    frag = _fragment(layout)
    if flag_mode == FlagMode.PARITY:
        for q in src:
            frag.cx(q, layout.oracle)
    else:
        frag.extend(multi_controlled_x(list(src), layout.oracle,
                                       layout.num_qubits))
    return frag


def _remap(frag: Circuit, mapping: dict[int, int], onto: Circuit) -> Circuit:
    for op in frag.ops:
        onto.append(GateOp(op.kind, tuple(mapping[q] for q in op.qubits),
                           op.params))
    return onto


def output_diffuser(layout: RegisterLayout, target: str = "output") -> Circuit:
    """The exact reflection 2|s><s|-I over the chosen register."""
    reg = layout.output if target == "output" else layout.input
    frag = _fragment(layout)
    plain = _plain_diffuser(len(reg))
    return _remap(plain, {i: q for i, q in enumerate(reg)}, frag)


# -- the assembled network ------------------------------------------------


@dataclass(frozen=True)
class IGOQNN:
    """The assembled parameterized circuit plus its parameter partition."""

    shape: NetworkShape
    synapse_mode: SynapseMode
    flag_mode: FlagMode
    layout: RegisterLayout
    circuit: Circuit
    neuron_params: tuple[Parameter, ...]
    synapse_params: tuple[Parameter, ...]
    repetitions: int
    superpose_output: bool = True
    diffuser_target: str = "output"
    flag_source: str = "input"

    @property
    def n_channels(self) -> int:
        return self.shape.n_database

    def parameters(self) -> list[Parameter]:
        return self.circuit.parameters()

    def encode_input(self, database_bits: Sequence[int]) -> Circuit:
        return encode_input(self.layout, database_bits)


def grover_repetitions(shape: NetworkShape) -> int:
    """ceil(sqrt(N)) with minimum 1, over the channel count N."""
    return max(1, math.ceil(math.sqrt(shape.n_database)))


def build_network(shape: NetworkShape,
                  synapse_mode: SynapseMode = SynapseMode.NULL_CONSISTENT,
                  flag_mode: FlagMode = FlagMode.PARITY,
                  *,
                  superpose_output: bool = True,
                  diffuser_target: str = "output",
                  flag_source: str = "input",
                  activations: Mapping[int, Circuit] | None = None,
                  max_qubits: int = DEFAULT_MAX_QUBITS) -> IGOQNN:
    """Assemble the full network circuit for ``shape``.

    ``activations`` optionally maps a hidden layer number (1 = shallowest)
    to a fixed fragment appended after that layer's neuron gates (the
    default activation is the identity).  ``diffuser_target`` and
    ``flag_source`` accept "output"/"input" and exist because the
    amplified and the checked register are configuration choices.
    """
    shape = NetworkShape(shape.n_database, shape.hidden_widths)
    synapse_mode = SynapseMode(synapse_mode)
    flag_mode = FlagMode(flag_mode)
    if diffuser_target not in ("output", "input"):
        raise ValueError(f"diffuser_target must be output|input, "
                         f"got {diffuser_target!r}")
    if flag_source not in ("input", "output"):
        raise ValueError(f"flag_source must be input|output, "
                         f"got {flag_source!r}")
    budget = qubit_budget(shape)
    if budget > max_qubits:
        raise CapacityError(
            f"shape needs {budget} qubits, exceeding the cap of {max_qubits}")

    layout = make_layout(shape)
    c = _fragment(layout)

    # step 1: superpositions
    for q in layout.all_hidden():
        c.h(q)
    if superpose_output:
        for q in layout.output:
            c.h(q)
    c.x(layout.oracle)
    c.h(layout.oracle)

    # step 2: neuron weights (+ optional per-layer activations)
    step2 = _fragment(layout)
    for layer, rng in enumerate(layout.hidden, start=1):
        for index in range(len(rng)):
            step2.extend(neuron_init(layout, layer, index))
        if activations and layer in activations:
            step2.extend(activations[layer])
    c.extend(step2)

    # step 3: inter-hidden entanglers, deepest pair first
    step3 = _fragment(layout)
    for deeper in range(len(layout.hidden), 1, -1):
        step3.extend(neural_entangler(layout, deeper, synapse_mode))
    c.extend(step3)

    # step 4: the Grover loop; every repetition re-emits the same parameters
    og = oracle_generator(layout, synapse_mode)
    orac = oracularizer(layout, synapse_mode)
    flag = oracle_flagging(layout, flag_mode, flag_source)
    diff = output_diffuser(layout, diffuser_target)
    reps = grover_repetitions(shape)
    for _ in range(reps):
        c.extend(og)
        c.extend(orac)
        c.extend(flag)
        c.extend(orac.inverse())
        c.extend(og.inverse())
        c.extend(diff)

    # step 5: uncompute the hidden register
    c.extend(step3.inverse())
    c.extend(step2.inverse())

    # step 6: measure hits
    for i, q in enumerate(layout.output):
        c.measure(q, i)

    params = c.parameters()
    neuron = tuple(p for p in params if p.name.startswith("neuron."))
    synapse = tuple(p for p in params if p.name.startswith("syn."))
    return IGOQNN(shape=shape, synapse_mode=synapse_mode, flag_mode=flag_mode,
                  layout=layout, circuit=c, neuron_params=neuron,
                  synapse_params=synapse, repetitions=reps,
                  superpose_output=superpose_output,
                  diffuser_target=diffuser_target, flag_source=flag_source)


def propagate(network: IGOQNN, bindings: Mapping[str, float],
              database_bits: Sequence[int],
              shots: int | None = None, seed: int = 0) -> np.ndarray:
    """Hit probability per output channel for one database input.

    Exact mode (``shots=None``) returns the true marginals; shot mode
    returns sampled frequencies (deterministic for a fixed seed).
    """
    enc = encode_input(network.layout, database_bits)
    bound = network.circuit.bind(bindings)
    state = new_zero_state(network.layout.num_qubits)
    enc.run(state)
    bound.run(state)
    if shots is None:
        return np.array([state.marginal_prob_one(q) for q in network.layout.output])
    draws = state.sample_bitstrings(shots, seed)
    n = network.layout.num_qubits
    freqs = []
    for q in network.layout.output:
        pos = n - 1 - q  # bitstrings list qubit n-1 first
        freqs.append(sum(1 for d in draws if d[pos] == "1") / shots)
    return np.array(freqs)
