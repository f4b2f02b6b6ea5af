"""Experiment plumbing: config parsing, dataset generation and files,
artifact emission (metrics CSV, parameter map, QASM, manifest).

Conventions, chosen for diffability:

* dataset files — one example per line, ``database_bits hits_bits``,
  most-significant channel first (channel N-1 is the leftmost character),
  ``#`` starts a comment;
* config files — flat ``section.key = value`` lines, same comment rule;
* metrics — CSV with a header row;
* manifest — the normalized config plus seed and code version, and nothing
  else (no timestamps), so identical runs emit identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .grover import (
    MarkedSet,
    analytic_success_probability,
    grover_search,
    optimal_iterations,
)
from .network import (
    FlagMode,
    IGOQNN,
    NetworkShape,
    SynapseMode,
    build_network,
    propagate,
)
from .qasm import export_qasm
from .training import (
    LossConfig,
    OptimizerConfig,
    TrainReport,
    TrainingExample,
    train,
)


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; the message names the field."""


# -- dataset generation ----------------------------------------------------

_GENERATOR_KINDS = ("mask_and", "fixed_map", "random_rule")


@dataclass(frozen=True)
class GeneratorSpec:
    """Rule for producing (database, hits) examples.

    kind "mask_and":    hits = database AND mask (mask: N bits)
    kind "fixed_map":   explicit database -> hits table, cycled in sorted
                        key order
    kind "random_rule": a seeded random boolean map, one hit pattern per
                        database pattern
    """

    kind: str
    n: int
    count: int
    mask: tuple[int, ...] | None = None
    table: Mapping[tuple[int, ...], tuple[int, ...]] | None = None

    def __post_init__(self):
        if self.kind not in _GENERATOR_KINDS:
            raise ConfigError(f"dataset.generator: unknown rule {self.kind!r}")
        if self.n < 1:
            raise ConfigError("dataset.n: must be >= 1")
        if self.count < 1:
            raise ConfigError("dataset.count: must be >= 1")
        if self.kind == "mask_and":
            if self.mask is None or len(self.mask) != self.n:
                raise ConfigError("dataset.mask: must give N bits")
            if any(b not in (0, 1) for b in self.mask):
                raise ConfigError("dataset.mask: bits must be 0/1")
        if self.kind == "fixed_map":
            if not self.table:
                raise ConfigError("dataset.table: required for fixed_map")
            for k, v in self.table.items():
                if len(k) != self.n or len(v) != self.n:
                    raise ConfigError("dataset.table: entries must have N bits")


def _index_bits(idx: int, n: int) -> tuple[int, ...]:
    return tuple((idx >> i) & 1 for i in range(n))


def _pick_databases(n: int, count: int,
                    rng: np.random.Generator) -> list[tuple[int, ...]]:
    total = 1 << n
    if count <= total:  # without replacement: small corpora stay distinct
        idxs = rng.permutation(total)[:count]
    else:
        idxs = rng.integers(0, total, size=count)
    return [_index_bits(int(i), n) for i in idxs]


def gen_dataset(spec: GeneratorSpec, seed: int) -> list[TrainingExample]:
    rng = np.random.default_rng(seed)
    if spec.kind == "mask_and":
        dbs = _pick_databases(spec.n, spec.count, rng)
        return [TrainingExample(db, tuple(a & b for a, b in zip(db, spec.mask)))
                for db in dbs]
    if spec.kind == "fixed_map":
        keys = sorted(spec.table)
        return [TrainingExample(keys[i % len(keys)],
                                tuple(spec.table[keys[i % len(keys)]]))
                for i in range(spec.count)]
    # random_rule: one random hit pattern per database pattern
    table = {_index_bits(i, spec.n): tuple(int(b) for b in rng.integers(0, 2, spec.n))
             for i in range(1 << spec.n)}
    dbs = _pick_databases(spec.n, spec.count, rng)
    return [TrainingExample(db, table[db]) for db in dbs]


# -- dataset files ---------------------------------------------------------

def _bits_str(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in reversed(bits))  # channel N-1 leftmost


def _parse_bits(s: str, lineno: int) -> tuple[int, ...]:
    if not s or any(c not in "01" for c in s):
        raise ValueError(f"line {lineno}: bad bit string {s!r}")
    return tuple(int(c) for c in reversed(s))


def format_dataset(dataset: Sequence[TrainingExample]) -> str:
    lines = ["# database hits (most-significant channel first)"]
    lines += [f"{_bits_str(ex.database)} {_bits_str(ex.hits)}" for ex in dataset]
    return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> list[TrainingExample]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'database hits'")
        db = _parse_bits(parts[0], lineno)
        hits = _parse_bits(parts[1], lineno)
        if len(db) != len(hits):
            raise ValueError(f"line {lineno}: database/hits widths differ")
        out.append(TrainingExample(db, hits))
    return out


def write_dataset(path: str, dataset: Sequence[TrainingExample]):
    with open(path, "w") as f:
        f.write(format_dataset(dataset))


def read_dataset(path: str) -> list[TrainingExample]:
    with open(path) as f:
        return parse_dataset(f.read())


# -- experiment config -----------------------------------------------------

@dataclass
class ExperimentConfig:
    shape: NetworkShape
    synapse_mode: SynapseMode = SynapseMode.NULL_CONSISTENT
    flag_mode: FlagMode = FlagMode.PARITY
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    dataset_path: str | None = None
    generator: GeneratorSpec | None = None
    output_dir: str = "run"
    seed: int | None = None
    mode: str = "exact"          # "exact" | "shots"
    shots: int = 1024

    def __post_init__(self):
        if (self.dataset_path is None) == (self.generator is None):
            raise ConfigError(
                "dataset: exactly one of dataset.path / dataset.generator required")
        if self.mode not in ("exact", "shots"):
            raise ConfigError(f"run.mode: must be exact|shots, got {self.mode!r}")
        if self.mode == "shots" and self.shots < 1:
            raise ConfigError("run.shots: must be >= 1")
        if self.generator is not None and self.generator.n != self.shape.n_database:
            raise ConfigError(
                f"dataset.n: generator N={self.generator.n} does not match "
                f"network N={self.shape.n_database}")


def _parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} lacks a section")
        out[key] = value.strip()
    return out


def _take(kv: dict[str, str], key: str, conv, default):
    if key not in kv:
        if default is _REQUIRED:
            raise ConfigError(f"{key}: required")
        return default
    raw = kv.pop(key)
    try:
        return conv(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: {e}") from None


_REQUIRED = object()


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _mask_bits(raw: str) -> tuple[int, ...]:
    if any(c not in "01" for c in raw):
        raise ValueError(f"bad bit string {raw!r}")
    return tuple(int(c) for c in reversed(raw))  # file order is MSB-first


def _map_table(raw: str) -> dict[tuple[int, ...], tuple[int, ...]]:
    table = {}
    for pair in raw.split(","):
        if ":" not in pair:
            raise ValueError(f"bad table entry {pair!r} (want db:hits)")
        k, v = pair.split(":", 1)
        table[_mask_bits(k.strip())] = _mask_bits(v.strip())
    return table


def parse_config(text: str) -> ExperimentConfig:
    kv = _parse_kv(text)
    n = _take(kv, "network.n_database", int, _REQUIRED)
    widths = _take(kv, "network.hidden_widths", _int_list, _REQUIRED)
    try:
        shape = NetworkShape(n, widths)
    except ValueError as e:
        raise ConfigError(f"network: {e}") from None
    try:
        synapse_mode = SynapseMode(_take(kv, "network.synapse_mode", str,
                                         SynapseMode.NULL_CONSISTENT.value))
    except ValueError:
        raise ConfigError("network.synapse_mode: unknown mode") from None
    try:
        flag_mode = FlagMode(_take(kv, "network.flag_mode", str,
                                   FlagMode.PARITY.value))
    except ValueError:
        raise ConfigError("network.flag_mode: unknown mode") from None

    try:
        loss = LossConfig(
            kind=_take(kv, "loss.kind", str, "bce"),
            l1_strength=_take(kv, "loss.l1_strength", float, 0.0),
            epsilon_clip=_take(kv, "loss.epsilon_clip", float, 1e-7))
    except ValueError as e:
        raise ConfigError(f"loss: {e}") from None

    try:
        optimizer = OptimizerConfig(
            kind=_take(kv, "optimizer.kind", str, "adam"),
            learning_rate=_take(kv, "optimizer.learning_rate", float, 0.1),
            beta1=_take(kv, "optimizer.beta1", float, 0.9),
            beta2=_take(kv, "optimizer.beta2", float, 0.999),
            adam_epsilon=_take(kv, "optimizer.adam_epsilon", float, 1e-8),
            spsa_a=_take(kv, "optimizer.spsa_a", float, 0.2),
            spsa_c=_take(kv, "optimizer.spsa_c", float, 0.1),
            spsa_alpha=_take(kv, "optimizer.spsa_alpha", float, 0.602),
            spsa_gamma=_take(kv, "optimizer.spsa_gamma", float, 0.101),
            spsa_stability=_take(kv, "optimizer.spsa_stability", float, 0.0),
            max_epochs=_take(kv, "optimizer.max_epochs", int, 100),
            seed=0,  # filled from run.seed below
            gradient=_take(kv, "optimizer.gradient", str, "parameter_shift"),
            fd_step=_take(kv, "optimizer.fd_step", float, 1e-5))
    except ValueError as e:
        raise ConfigError(f"optimizer: {e}") from None

    dataset_path = _take(kv, "dataset.path", str, None)
    generator = None
    rule = _take(kv, "dataset.generator", str, None)
    if rule is not None:
        generator = GeneratorSpec(
            kind=rule,
            n=_take(kv, "dataset.n", int, n),
            count=_take(kv, "dataset.count", int, _REQUIRED),
            mask=_take(kv, "dataset.mask", _mask_bits, None),
            table=_take(kv, "dataset.table", _map_table, None))

    seed = _take(kv, "run.seed", int, None)
    config = ExperimentConfig(
        shape=shape, synapse_mode=synapse_mode, flag_mode=flag_mode,
        loss=loss, optimizer=optimizer,
        dataset_path=dataset_path, generator=generator,
        output_dir=_take(kv, "run.output_dir", str, "run"),
        seed=seed,
        mode=_take(kv, "run.mode", str, "exact"),
        shots=_take(kv, "run.shots", int, 1024))
    if kv:
        raise ConfigError(f"unknown key {sorted(kv)[0]!r}")
    return config


def format_config(config: ExperimentConfig) -> str:
    """Normalized flat form; also the manifest body."""
    g = config.generator
    pairs: list[tuple[str, str]] = [
        ("network.n_database", str(config.shape.n_database)),
        ("network.hidden_widths",
         ",".join(str(w) for w in config.shape.hidden_widths)),
        ("network.synapse_mode", config.synapse_mode.value),
        ("network.flag_mode", config.flag_mode.value),
        ("loss.kind", config.loss.kind),
        ("loss.l1_strength", repr(config.loss.l1_strength)),
        ("loss.epsilon_clip", repr(config.loss.epsilon_clip)),
        ("optimizer.kind", config.optimizer.kind),
        ("optimizer.learning_rate", repr(config.optimizer.learning_rate)),
        ("optimizer.beta1", repr(config.optimizer.beta1)),
        ("optimizer.beta2", repr(config.optimizer.beta2)),
        ("optimizer.adam_epsilon", repr(config.optimizer.adam_epsilon)),
        ("optimizer.spsa_a", repr(config.optimizer.spsa_a)),
        ("optimizer.spsa_c", repr(config.optimizer.spsa_c)),
        ("optimizer.spsa_alpha", repr(config.optimizer.spsa_alpha)),
        ("optimizer.spsa_gamma", repr(config.optimizer.spsa_gamma)),
        ("optimizer.spsa_stability", repr(config.optimizer.spsa_stability)),
        ("optimizer.max_epochs", str(config.optimizer.max_epochs)),
        ("optimizer.gradient", config.optimizer.gradient),
        ("optimizer.fd_step", repr(config.optimizer.fd_step)),
    ]
    if config.dataset_path is not None:
        pairs.append(("dataset.path", config.dataset_path))
    if g is not None:
        pairs.append(("dataset.generator", g.kind))
        pairs.append(("dataset.n", str(g.n)))
        pairs.append(("dataset.count", str(g.count)))
        if g.mask is not None:
            pairs.append(("dataset.mask", _bits_str(g.mask)))
        if g.table is not None:
            pairs.append(("dataset.table", ",".join(
                f"{_bits_str(k)}:{_bits_str(v)}" for k, v in sorted(g.table.items()))))
    pairs.append(("run.output_dir", config.output_dir))
    if config.seed is not None:
        pairs.append(("run.seed", str(config.seed)))
    pairs.append(("run.mode", config.mode))
    if config.mode == "shots":
        pairs.append(("run.shots", str(config.shots)))
    return "\n".join(f"{k} = {v}" for k, v in pairs) + "\n"


# -- experiment ------------------------------------------------------------

def _load_examples(config: ExperimentConfig) -> list[TrainingExample]:
    if config.dataset_path is not None:
        examples = read_dataset(config.dataset_path)
    else:
        examples = gen_dataset(config.generator, config.seed)
    if not examples:
        raise ConfigError("dataset.path: file holds no examples")
    for ex in examples:
        if len(ex.database) != config.shape.n_database:
            raise ConfigError(
                f"dataset: example width {len(ex.database)} does not match "
                f"network.n_database {config.shape.n_database}")
    return examples


def run_experiment(config: ExperimentConfig) -> dict[str, str]:
    """Train per config and emit metrics/params/QASM/manifest artifacts.

    Returns the artifact paths.  Byte-determinism in exact mode: nothing
    written depends on time or machine.
    """
    if config.seed is None:
        raise ConfigError("run.seed: required")
    network = build_network(config.shape, synapse_mode=config.synapse_mode,
                            flag_mode=config.flag_mode)
    examples = _load_examples(config)
    optimizer = dataclasses.replace(config.optimizer, seed=config.seed)
    report = train(network, examples, config.loss, optimizer)

    os.makedirs(config.output_dir, exist_ok=True)
    paths = {name: os.path.join(config.output_dir, fname)
             for name, fname in (("metrics", "metrics.csv"),
                                 ("params", "params.json"),
                                 ("qasm", "circuit.qasm"),
                                 ("manifest", "manifest.txt"))}
    with open(paths["metrics"], "w") as f:
        f.write("\n".join(report.metrics_lines()) + "\n")
    with open(paths["params"], "w") as f:
        json.dump(report.final_bindings, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(paths["qasm"], "w") as f:
        f.write(export_qasm(network.circuit, report.final_bindings))
    manifest = (format_config(config)
                + f"code.version = {code_version()}\n")
    with open(paths["manifest"], "w") as f:
        f.write(manifest)
    if config.generator is not None:
        paths["dataset"] = os.path.join(config.output_dir, "dataset.txt")
        write_dataset(paths["dataset"], examples)
    return paths


def evaluate(network: IGOQNN, bindings: Mapping[str, float],
             examples: Sequence[TrainingExample], loss_config: LossConfig,
             shots: int | None = None, seed: int = 0,
             threshold: float = 0.5) -> dict[str, float]:
    """Loss and accuracies of fixed bindings on a dataset.

    With ``shots`` the marginals are sampled frequencies; exact otherwise.
    """
    from .training import _loss_terms  # local: avoids a public-surface helper

    losses = []
    exact = 0
    bit_hits = 0
    bits_total = 0
    for i, ex in enumerate(examples):
        probs = propagate(network, bindings, ex.database, shots=shots,
                          seed=seed + i)
        losses.append(_loss_terms(probs, np.asarray(ex.hits), loss_config)[0])
        pred = tuple(int(p > threshold) for p in probs)
        exact += int(pred == ex.hits)
        bit_hits += sum(int(a == b) for a, b in zip(pred, ex.hits))
        bits_total += len(ex.hits)
    l1 = loss_config.l1_strength * sum(
        abs(bindings[p.name]) for p in network.synapse_params)
    return {"loss": float(np.mean(losses) + l1),
            "exact_match_accuracy": exact / len(examples),
            "per_bit_accuracy": bit_hits / bits_total}


def grover_demo(n_index_qubits: int, marked: Sequence[int],
                iterations: int | None = None) -> str:
    """Analytic vs simulated Grover success probability, as a text report."""
    marked_set = MarkedSet(n_index_qubits, frozenset(marked))
    num_entries = 1 << n_index_qubits
    k = (optimal_iterations(num_entries, len(marked_set.marked))
         if iterations is None else iterations)
    _, simulated = grover_search(marked_set, iterations=k)
    analytic = analytic_success_probability(num_entries,
                                            len(marked_set.marked), k)
    return "\n".join([
        f"entries {num_entries}  marked {sorted(marked_set.marked)}  iterations {k}",
        f"analytic  {analytic:.12f}",
        f"simulated {simulated:.12f}",
        f"abs diff  {abs(analytic - simulated):.3e}",
    ])


def code_version() -> str:
    from . import __version__
    return __version__
