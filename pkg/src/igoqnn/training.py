"""Classical optimization of the network parameters: losses, gradients,
optimizers, and the training loop.

Gradients come in two flavors:

* ``grad_central_fd`` — the baseline oracle, (L(t+h) - L(t-h)) / 2h per
  parameter.
* ``grad_param_shift`` — analytic shifts applied to the marginal
  probabilities inside the loss via the chain rule.  Writing
  u3(t, p, l) = P(p) . Ry(t) . P(l) (P = diag(1, e^{ix})), every u3
  parameter and the controlled phi/lambda have a generator with a single
  eigenvalue gap, so the two-point +-pi/2 rule (coefficient 1/2) is exact.
  The theta of a *controlled* u3 has generator |1><1| (x) Y/2 with
  eigenvalue gaps {1/2, 1}; its exact rule needs four evaluations:
      f' = c1 [f(t+pi/2) - f(t-pi/2)] - c2 [f(t+3pi/2) - f(t-3pi/2)],
      c1 = (2+sqrt(2))/8,  c2 = (2-sqrt(2))/8.
  Parameters appearing in several gates (the Grover repetitions re-emit
  them, inverses carry them negated) are differentiated occurrence by
  occurrence: one gate's matrix is patched per shifted evaluation and the
  contributions are summed, scaled by the slot's +-1 sign.

The evaluator prunes gates outside the reverse lightcone of the measured
register (they cannot move the marginals, so their occurrences contribute
exactly zero gradient), checkpoints the forward state at each remaining
occurrence, and re-propagates only suffixes.  The L1 term is classical and
is added to both gradient flavors identically (subgradient 0 at 0).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import (
    UnboundParameterError,
    gate_matrix,
    slot_parameter,
    slot_sign,
)
from .network import IGOQNN, propagate
from .statevector import _prob_one, run_program, u3_matrix


@dataclass(frozen=True)
class TrainingExample:
    """One (database bits, expected hit bits) pair, both length N."""

    database: tuple[int, ...]
    hits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "database", tuple(int(b) for b in self.database))
        object.__setattr__(self, "hits", tuple(int(b) for b in self.hits))
        if len(self.database) != len(self.hits):
            raise ValueError("database and hits lengths differ")
        if any(b not in (0, 1) for b in self.database + self.hits):
            raise ValueError("bits must be 0/1")


Dataset = Sequence[TrainingExample]


@dataclass(frozen=True)
class LossConfig:
    kind: str = "bce"              # "bce" | "l2"
    l1_strength: float = 0.0       # applied to synapse parameters only
    epsilon_clip: float = 1e-7     # BCE log safety

    def __post_init__(self):
        if self.kind not in ("bce", "l2"):
            raise ValueError(f"loss kind must be bce|l2, got {self.kind!r}")
        if self.l1_strength < 0:
            raise ValueError("l1_strength must be >= 0")
        if not 0 < self.epsilon_clip < 0.5:
            raise ValueError("epsilon_clip must lie in (0, 0.5)")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "adam"             # "gradient_descent" | "adam" | "spsa"
    learning_rate: float = 0.1
    beta1: float = 0.9             # Adam moment decays
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    spsa_a: float = 0.2            # SPSA gain schedules
    spsa_c: float = 0.1
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    spsa_stability: float = 0.0
    max_epochs: int = 100
    seed: int = 0
    gradient: str = "parameter_shift"  # | "central_fd"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("gradient_descent", "adam", "spsa"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.gradient not in ("parameter_shift", "central_fd"):
            raise ValueError(f"unknown gradient method {self.gradient!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class TrainReport:
    """Per-epoch metrics plus the final bindings.

    ``wall_time`` is informational and excluded from the serialized form,
    which is what the byte-for-byte determinism promise covers.
    """

    losses: list[float]
    exact_match_accuracies: list[float]
    per_bit_accuracies: list[float]
    final_bindings: dict[str, float]
    wall_time: float

    @property
    def epochs_run(self) -> int:
        return len(self.losses)

    def metrics_lines(self) -> list[str]:
        lines = ["epoch,loss,exact_match_accuracy,per_bit_accuracy"]
        for e, (l, a, b) in enumerate(zip(self.losses,
                                          self.exact_match_accuracies,
                                          self.per_bit_accuracies)):
            lines.append(f"{e},{l!r},{a!r},{b!r}")
        return lines


# -- shift rules ----------------------------------------------------------

_HALF_PI = math.pi / 2.0
_TWO_TERM = ((_HALF_PI, 0.5), (-_HALF_PI, -0.5))
_C1 = (2.0 + math.sqrt(2.0)) / 8.0
_C2 = (2.0 - math.sqrt(2.0)) / 8.0
_FOUR_TERM = ((_HALF_PI, _C1), (-_HALF_PI, -_C1),
              (3.0 * _HALF_PI, -_C2), (-3.0 * _HALF_PI, _C2))


# -- losses ---------------------------------------------------------------

def _loss_terms(probs: np.ndarray, hits: np.ndarray,
                cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Per-example data loss and its derivative w.r.t. the marginals."""
    n = probs.shape[0]
    y = hits.astype(np.float64)
    if cfg.kind == "bce":
        eps = cfg.epsilon_clip
        p = np.clip(probs, eps, 1.0 - eps)
        value = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
        inside = (probs > eps) & (probs < 1.0 - eps)
        dldp = np.where(inside, -(y / p - (1.0 - y) / (1.0 - p)) / n, 0.0)
    else:
        value = float(np.mean((probs - y) ** 2))
        dldp = 2.0 * (probs - y) / n
    return value, dldp


def _l1_term(values: Mapping[str, float], synapse_names: Sequence[str],
             cfg: LossConfig) -> float:
    if cfg.l1_strength == 0.0:
        return 0.0
    return cfg.l1_strength * float(sum(abs(values[n]) for n in synapse_names))


def loss(network: IGOQNN, bindings: Mapping[str, float],
         example: TrainingExample, loss_config: LossConfig) -> float:
    """Data loss on one example plus the L1 penalty on synapse parameters."""
    if len(example.database) != network.n_channels:
        raise ValueError(f"example has {len(example.database)} channels, "
                         f"network {network.n_channels}")
    probs = propagate(network, bindings, example.database)
    value, _ = _loss_terms(probs, np.asarray(example.hits), loss_config)
    return value + _l1_term(bindings, [p.name for p in network.synapse_params],
                            loss_config)


# -- compiled evaluator ---------------------------------------------------

class _Engine:
    """A network lowered to flat arrays, pruned to the measured lightcone."""

    def __init__(self, network: IGOQNN):
        circuit = network.circuit
        self.network = network
        self.num_qubits = circuit.num_qubits
        self.measured = list(network.layout.output)
        self.input_qubits = list(network.layout.input)
        self.param_names = [p.name for p in circuit.parameters()]
        self.param_index = {n: i for i, n in enumerate(self.param_names)}
        self.synapse_names = [p.name for p in network.synapse_params]

        # reverse-lightcone pruning: walk back from the measured qubits and
        # keep only gates that can influence them
        cone = set(self.measured)
        kept_rev = []
        for op in reversed(circuit.ops):
            if cone.intersection(op.qubits):
                kept_rev.append(op)
                cone.update(op.qubits)
        self.ops = list(reversed(kept_rev))

        G = len(self.ops)
        self.kinds = np.empty(G, dtype=np.int8)
        self.q0 = np.empty(G, dtype=np.int64)
        self.q1 = np.empty(G, dtype=np.int64)
        self.mats = np.empty((G, 4), dtype=np.complex128)
        # per symbolic gate: (gate, [slot descriptors]); a descriptor is
        # either a literal float or (param row index, sign)
        self.sym_gates: list[tuple[int, list]] = []
        # per parameter row: occurrences (gate, slot, sign, controlled)
        self.occurrences: list[list[tuple[int, int, float, bool]]] = [
            [] for _ in self.param_names]

        for g, op in enumerate(self.ops):
            controlled = op.kind in ("cx", "cu3")
            if controlled:
                self.kinds[g] = 1
                self.q0[g], self.q1[g] = op.qubits
            else:
                self.kinds[g] = 0
                self.q0[g] = op.qubits[0]
                self.q1[g] = -1
            slots = []
            symbolic = False
            for si, slot in enumerate(op.params):
                p = slot_parameter(slot)
                if p is None:
                    slots.append(float(slot))
                else:
                    symbolic = True
                    row = self.param_index[p.name]
                    sign = slot_sign(slot)
                    slots.append((row, sign))
                    self.occurrences[row].append((g, si, sign,
                                                  op.kind == "cu3"))
            if symbolic:
                self.sym_gates.append((g, slots))
            else:
                self.mats[g] = gate_matrix(op).reshape(4)

        self.sym_slots = dict(self.sym_gates)
        self.positions = sorted({g for occs in self.occurrences for g, *_ in occs})
        self.pos_index = {g: i for i, g in enumerate(self.positions)}
        dim = 1 << self.num_qubits
        self._checkpoints = np.empty((len(self.positions), dim),
                                     dtype=np.complex128)
        self._state = np.empty(dim, dtype=np.complex128)
        self._scratch = np.empty(dim, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.ops)

    def _angles(self, slots, vec: np.ndarray) -> list[float]:
        return [s if isinstance(s, float) else s[1] * vec[s[0]] for s in slots]

    def refresh_mats(self, vec: np.ndarray):
        """Recompute the payload matrices of parameterized gates."""
        for g, slots in self.sym_gates:
            t, p, l = self._angles(slots, vec)
            self.mats[g] = u3_matrix(t, p, l).reshape(4)

    def vec_of(self, bindings: Mapping[str, float]) -> np.ndarray:
        try:
            return np.array([float(bindings[n]) for n in self.param_names])
        except KeyError as e:
            raise UnboundParameterError(
                f"no binding for parameter {e.args[0]!r}") from None

    def bindings_of(self, vec: np.ndarray) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.param_names, vec)}

    def _reset_state(self, database_bits: Sequence[int], amps: np.ndarray):
        amps[:] = 0.0
        idx = 0
        for q, b in zip(self.input_qubits, database_bits):
            if b:
                idx |= 1 << q
        amps[idx] = 1.0

    def _marginals(self, amps: np.ndarray) -> np.ndarray:
        return np.array([_prob_one(amps, q) for q in self.measured])

    def forward(self, vec: np.ndarray, database_bits: Sequence[int],
                refresh: bool = True) -> np.ndarray:
        """Output marginals for one input (matrices already set unless
        ``refresh``)."""
        if refresh:
            self.refresh_mats(vec)
        self._reset_state(database_bits, self._state)
        run_program(self._state, self.kinds, self.q0, self.q1, self.mats,
                    0, len(self.ops))
        return self._marginals(self._state)

    def grad_example(self, vec: np.ndarray, example: TrainingExample,
                     cfg: LossConfig) -> tuple[float, np.ndarray, np.ndarray]:
        """(data loss, marginals, d loss / d vec) for one example via shifts."""
        self.refresh_mats(vec)
        amps = self._state
        self._reset_state(example.database, amps)
        prev = 0
        for i, pos in enumerate(self.positions):
            run_program(amps, self.kinds, self.q0, self.q1, self.mats,
                        prev, pos)
            self._checkpoints[i] = amps
            prev = pos
        run_program(amps, self.kinds, self.q0, self.q1, self.mats,
                    prev, len(self.ops))
        probs = self._marginals(amps)
        value, dldp = _loss_terms(probs, np.asarray(example.hits), cfg)

        grads = np.zeros(len(self.param_names))
        G = len(self.ops)
        scratch = self._scratch
        sym = self.sym_slots
        for row, occs in enumerate(self.occurrences):
            if not occs:
                continue
            total = 0.0
            for g, si, sign, controlled in occs:
                angles = self._angles(sym[g], vec)
                rule = _FOUR_TERM if (controlled and si == 0) else _TWO_TERM
                saved = self.mats[g].copy()
                dp = np.zeros(len(self.measured))
                for shift, coeff in rule:
                    shifted = list(angles)
                    shifted[si] += shift
                    self.mats[g] = u3_matrix(*shifted).reshape(4)
                    np.copyto(scratch, self._checkpoints[self.pos_index[g]])
                    run_program(scratch, self.kinds, self.q0, self.q1,
                                self.mats, g, G)
                    dp += coeff * self._marginals(scratch)
                self.mats[g] = saved
                total += sign * float(dldp @ dp)
            grads[row] = total
        return value, probs, grads

    def batch_loss(self, vec: np.ndarray, batch: Dataset,
                   cfg: LossConfig) -> float:
        self.refresh_mats(vec)
        values = [_loss_terms(self.forward(vec, ex.database, refresh=False),
                              np.asarray(ex.hits), cfg)[0] for ex in batch]
        l1 = cfg.l1_strength * sum(
            abs(vec[self.param_index[n]]) for n in self.synapse_names)
        return float(np.mean(values)) + float(l1)


def _check_batch(network: IGOQNN, batch: Dataset):
    if not batch:
        raise ValueError("dataset must be non-empty")
    for ex in batch:
        if len(ex.database) != network.n_channels:
            raise ValueError(
                f"example has {len(ex.database)} channels, "
                f"network expects {network.n_channels}")


def _l1_subgradient(engine: _Engine, vec: np.ndarray,
                    cfg: LossConfig) -> np.ndarray:
    g = np.zeros(len(vec))
    if cfg.l1_strength:
        for n in engine.synapse_names:
            i = engine.param_index[n]
            g[i] = cfg.l1_strength * np.sign(vec[i])  # subgradient 0 at 0
    return g


def grad_param_shift(network: IGOQNN, bindings: Mapping[str, float],
                     batch: Dataset, loss_config: LossConfig) -> dict[str, float]:
    """Batch-mean analytic-shift gradient per parameter."""
    _check_batch(network, batch)
    engine = _Engine(network)
    vec = engine.vec_of(bindings)
    grads = np.zeros(len(vec))
    for ex in batch:
        _, _, g = engine.grad_example(vec, ex, loss_config)
        grads += g
    grads /= len(batch)
    grads += _l1_subgradient(engine, vec, loss_config)
    return engine.bindings_of(grads)


def grad_central_fd(network: IGOQNN, bindings: Mapping[str, float],
                    batch: Dataset, loss_config: LossConfig,
                    h: float = 1e-5) -> dict[str, float]:
    """Central finite differences of the batch-mean loss (baseline oracle)."""
    if not 1e-8 <= h <= 1e-2:
        raise ValueError(f"h must lie in [1e-8, 1e-2], got {h}")
    _check_batch(network, batch)
    engine = _Engine(network)
    vec = engine.vec_of(bindings)
    grads = np.zeros(len(vec))
    for i in range(len(vec)):
        vec[i] += h
        up = engine.batch_loss(vec, batch, loss_config)
        vec[i] -= 2 * h
        down = engine.batch_loss(vec, batch, loss_config)
        vec[i] += h
        grads[i] = (up - down) / (2.0 * h)
    return engine.bindings_of(grads)


# -- optimizers -----------------------------------------------------------

class _GradientDescent:
    def __init__(self, cfg: OptimizerConfig):
        self.lr = cfg.learning_rate

    def step(self, vec: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return vec - self.lr * grad


class _Adam:
    def __init__(self, cfg: OptimizerConfig):
        self.lr = cfg.learning_rate
        self.b1, self.b2, self.eps = cfg.beta1, cfg.beta2, cfg.adam_epsilon
        self.m = None
        self.v = None
        self.t = 0

    def step(self, vec: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(vec)
            self.v = np.zeros_like(vec)
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        mhat = self.m / (1 - self.b1 ** self.t)
        vhat = self.v / (1 - self.b2 ** self.t)
        return vec - self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class SPSAState:
    """Iteration counter plus the seeded perturbation stream."""

    seed: int
    step: int = 0
    rng: np.random.Generator = None

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)


def spsa_step(network: IGOQNN, bindings: Mapping[str, float], batch: Dataset,
              loss_config: LossConfig, optimizer_config: OptimizerConfig,
              state: SPSAState,
              _engine: "_Engine | None" = None) -> tuple[dict[str, float], SPSAState]:
    """One simultaneous-perturbation update: two loss evaluations total."""
    _check_batch(network, batch)
    engine = _engine or _Engine(network)
    vec = engine.vec_of(bindings)
    state.step += 1
    k = state.step
    cfg = optimizer_config
    ak = cfg.spsa_a / (k + cfg.spsa_stability) ** cfg.spsa_alpha
    ck = cfg.spsa_c / k ** cfg.spsa_gamma
    delta = state.rng.integers(0, 2, size=len(vec)) * 2.0 - 1.0  # Rademacher
    up = engine.batch_loss(vec + ck * delta, batch, loss_config)
    down = engine.batch_loss(vec - ck * delta, batch, loss_config)
    ghat = (up - down) / (2.0 * ck) * delta  # delta_i^-1 == delta_i
    return engine.bindings_of(vec - ak * ghat), state


# -- prediction and the loop ----------------------------------------------

def predict_hits(network: IGOQNN, bindings: Mapping[str, float],
                 database_bits: Sequence[int],
                 threshold: float = 0.5) -> tuple[int, ...]:
    """Thresholded hit bits, channel 0 first; an exact tie predicts 0."""
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    probs = propagate(network, bindings, database_bits)
    return tuple(int(p > threshold) for p in probs)


def _accuracies(probs_per_example: list[np.ndarray],
                batch: Dataset) -> tuple[float, float]:
    exact = 0
    bit_hits = 0
    bits_total = 0
    for probs, ex in zip(probs_per_example, batch):
        pred = tuple(int(p > 0.5) for p in probs)
        exact += int(pred == ex.hits)
        bit_hits += sum(int(a == b) for a, b in zip(pred, ex.hits))
        bits_total += len(ex.hits)
    return exact / len(batch), bit_hits / bits_total


EARLY_STOP_WINDOW = 20
EARLY_STOP_MIN_IMPROVEMENT = 1e-6


def train(network: IGOQNN, dataset: Dataset, loss_config: LossConfig,
          optimizer_config: OptimizerConfig) -> TrainReport:
    """Full-batch training; per-epoch loss and thresholded hit accuracy.

    Initial parameters are uniform in [-0.1, 0.1], seeded.  Stops early
    when the loss improved by less than 1e-6 over the last 20 epochs.
    Exact mode throughout; deterministic for a fixed config and seed.
    """
    _check_batch(network, dataset)
    cfg = optimizer_config
    engine = _Engine(network)
    rng = np.random.default_rng(cfg.seed)
    vec = rng.uniform(-0.1, 0.1, size=len(engine.param_names))

    if cfg.kind == "spsa":
        spsa_state = SPSAState(seed=cfg.seed)
    else:
        opt = _Adam(cfg) if cfg.kind == "adam" else _GradientDescent(cfg)

    losses: list[float] = []
    exact_accs: list[float] = []
    bit_accs: list[float] = []
    t0 = time.perf_counter()
    for _epoch in range(cfg.max_epochs):
        if cfg.kind == "spsa":
            engine.refresh_mats(vec)
            probs = [engine.forward(vec, ex.database, refresh=False)
                     for ex in dataset]
            data = float(np.mean([_loss_terms(p, np.asarray(ex.hits),
                                              loss_config)[0]
                                  for p, ex in zip(probs, dataset)]))
            epoch_loss = data + float(loss_config.l1_strength * sum(
                abs(vec[engine.param_index[n]]) for n in engine.synapse_names))
            new_bindings, spsa_state = spsa_step(
                network, engine.bindings_of(vec), dataset, loss_config, cfg,
                spsa_state, _engine=engine)
            new_vec = engine.vec_of(new_bindings)
        elif cfg.gradient == "central_fd":
            engine.refresh_mats(vec)
            probs = [engine.forward(vec, ex.database, refresh=False)
                     for ex in dataset]
            data = float(np.mean([_loss_terms(p, np.asarray(ex.hits),
                                              loss_config)[0]
                                  for p, ex in zip(probs, dataset)]))
            epoch_loss = data + float(loss_config.l1_strength * sum(
                abs(vec[engine.param_index[n]]) for n in engine.synapse_names))
            fd = grad_central_fd(network, engine.bindings_of(vec), dataset,
                                 loss_config, cfg.fd_step)
            new_vec = opt.step(vec, engine.vec_of(fd))
        else:
            grads = np.zeros(len(vec))
            probs = []
            data = 0.0
            for ex in dataset:
                value, p, g = engine.grad_example(vec, ex, loss_config)
                data += value
                grads += g
                probs.append(p)
            data /= len(dataset)
            grads /= len(dataset)
            grads += _l1_subgradient(engine, vec, loss_config)
            epoch_loss = data + float(loss_config.l1_strength * sum(
                abs(vec[engine.param_index[n]]) for n in engine.synapse_names))
            new_vec = opt.step(vec, grads)

        losses.append(epoch_loss)
        ea, ba = _accuracies(probs, dataset)
        exact_accs.append(ea)
        bit_accs.append(ba)
        vec = new_vec
        if (len(losses) > EARLY_STOP_WINDOW
                and losses[-1 - EARLY_STOP_WINDOW] - losses[-1]
                < EARLY_STOP_MIN_IMPROVEMENT):
            break

    return TrainReport(losses=losses,
                       exact_match_accuracies=exact_accs,
                       per_bit_accuracies=bit_accs,
                       final_bindings=engine.bindings_of(vec),
                       wall_time=time.perf_counter() - t0)
