"""Harness contracts: dataset rules and files, flat config parsing with
field-naming errors, experiment artifacts and their byte determinism, the
Grover demo report, and the CLI subcommands end to end."""

import json
import os

import numpy as np
import pytest

from igoqnn.cli import main
from igoqnn.harness import (
    ConfigError,
    ExperimentConfig,
    GeneratorSpec,
    evaluate,
    format_config,
    format_dataset,
    gen_dataset,
    grover_demo,
    parse_config,
    parse_dataset,
    read_dataset,
    run_experiment,
    write_dataset,
)
from igoqnn.network import NetworkShape, build_network
from igoqnn.qasm import read_qasm
from igoqnn.training import LossConfig, TrainingExample


# -- dataset generation -----------------------------------------------------

def test_mask_and_rule_satisfied_exhaustively():
    spec = GeneratorSpec(kind="mask_and", n=3, count=8, mask=(1, 0, 1))
    for ex in gen_dataset(spec, seed=0):
        assert ex.hits == tuple(a & b for a, b in zip(ex.database, spec.mask))


def test_mask_and_spot_values():
    # database 10 under mask 11 keeps its one set bit
    spec = GeneratorSpec(kind="mask_and", n=2, count=4, mask=(1, 1))
    data = {ex.database: ex.hits for ex in gen_dataset(spec, seed=1)}
    assert data[(0, 1)] == (0, 1)          # "10" most-significant-first
    spec0 = GeneratorSpec(kind="mask_and", n=2, count=4, mask=(0, 0))
    assert all(ex.hits == (0, 0) for ex in gen_dataset(spec0, seed=1))


def test_small_counts_sample_without_replacement():
    spec = GeneratorSpec(kind="mask_and", n=2, count=4, mask=(1, 1))
    dbs = [ex.database for ex in gen_dataset(spec, seed=3)]
    assert sorted(dbs) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_large_counts_sample_with_replacement():
    spec = GeneratorSpec(kind="mask_and", n=1, count=10, mask=(1,))
    assert len(gen_dataset(spec, seed=0)) == 10


def test_fixed_map_cycles_sorted_keys():
    table = {(0,): (1,), (1,): (0,)}
    spec = GeneratorSpec(kind="fixed_map", n=1, count=5, table=table)
    data = gen_dataset(spec, seed=9)
    assert [ex.database for ex in data] == [(0,), (1,), (0,), (1,), (0,)]
    assert all(ex.hits == table[ex.database] for ex in data)


def test_fixed_map_covering_all_patterns():
    table = {(a, b): (b, a) for a in (0, 1) for b in (0, 1)}
    spec = GeneratorSpec(kind="fixed_map", n=2, count=4, table=table)
    data = gen_dataset(spec, seed=0)
    assert len({ex.database for ex in data}) == 4


def test_random_rule_is_a_function_and_deterministic():
    spec = GeneratorSpec(kind="random_rule", n=2, count=12)
    a = gen_dataset(spec, seed=5)
    b = gen_dataset(spec, seed=5)
    assert a == b
    seen = {}
    for ex in a:
        assert seen.setdefault(ex.database, ex.hits) == ex.hits
    assert gen_dataset(spec, seed=6) != a


def test_generator_spec_validation():
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="xor", n=1, count=1)
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="mask_and", n=2, count=1, mask=(1,))
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="mask_and", n=1, count=0, mask=(1,))
    with pytest.raises(ConfigError):
        GeneratorSpec(kind="fixed_map", n=1, count=1, table={})


# -- dataset files -----------------------------------------------------------

def test_dataset_file_roundtrip(tmp_path):
    data = [TrainingExample((0, 1), (1, 0)), TrainingExample((1, 1), (0, 0))]
    path = tmp_path / "d.txt"
    write_dataset(str(path), data)
    assert read_dataset(str(path)) == data


def test_dataset_file_is_msb_first():
    text = format_dataset([TrainingExample((0, 1), (1, 0))])
    # database (ch0=0, ch1=1) prints as "10"; hits (ch0=1, ch1=0) as "01"
    assert "10 01" in text
    back = parse_dataset("10 01\n")
    assert back == [TrainingExample((0, 1), (1, 0))]


def test_dataset_comments_and_blanks():
    data = parse_dataset("# header\n\n1 1  # trailing\n0 0\n")
    assert len(data) == 2


def test_dataset_parse_errors_name_lines():
    with pytest.raises(ValueError, match="line 2"):
        parse_dataset("1 1\n0 0 0\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_dataset("2 0\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_dataset("01 0\n")


# -- config -------------------------------------------------------------------

MINIMAL = """
network.n_database = 1
network.hidden_widths = 1
dataset.generator = fixed_map
dataset.count = 4
dataset.table = 0:0,1:1
"""


def test_parse_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.shape == NetworkShape(1, (1,))
    assert cfg.loss.kind == "bce"
    assert cfg.optimizer.kind == "adam"
    assert cfg.mode == "exact"
    assert cfg.seed is None


def test_parse_full_config():
    cfg = parse_config(MINIMAL + """
loss.kind = l2
loss.l1_strength = 0.05
optimizer.kind = spsa
optimizer.max_epochs = 17
run.seed = 12
run.mode = shots
run.shots = 64
run.output_dir = out
""")
    assert cfg.loss.kind == "l2" and cfg.loss.l1_strength == 0.05
    assert cfg.optimizer.kind == "spsa" and cfg.optimizer.max_epochs == 17
    assert cfg.seed == 12 and cfg.mode == "shots" and cfg.shots == 64


@pytest.mark.parametrize("line,field", [
    ("bogus.key = 1", "bogus.key"),
    ("loss.kind = hinge", "loss"),
    ("optimizer.learning_rate = fast", "optimizer.learning_rate"),
    ("network.flag_mode = maybe", "network.flag_mode"),
    ("dataset.mask = 12", "dataset.mask"),
])
def test_config_errors_name_the_field(line, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(MINIMAL + line + "\n")


def test_config_requires_exactly_one_dataset_source(tmp_path):
    with pytest.raises(ConfigError, match="dataset"):
        parse_config("network.n_database = 1\nnetwork.hidden_widths = 1\n")
    with pytest.raises(ConfigError, match="dataset"):
        parse_config(MINIMAL + "dataset.path = d.txt\n")


def test_config_rejects_mismatched_generator_width():
    with pytest.raises(ConfigError, match="dataset.n"):
        parse_config("""
network.n_database = 2
network.hidden_widths = 1
dataset.generator = mask_and
dataset.n = 3
dataset.count = 2
dataset.mask = 101
""")


def test_format_config_roundtrips():
    cfg = parse_config(MINIMAL + "run.seed = 4\n")
    again = parse_config(format_config(cfg))
    assert format_config(again) == format_config(cfg)


# -- run_experiment -----------------------------------------------------------

def _experiment(tmp_path, **overrides) -> ExperimentConfig:
    cfg = parse_config(MINIMAL + "optimizer.max_epochs = 30\n")
    cfg.output_dir = str(tmp_path / overrides.pop("dirname", "run"))
    cfg.seed = overrides.pop("seed", 7)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def test_run_experiment_emits_all_artifacts(tmp_path):
    paths = run_experiment(_experiment(tmp_path))
    for name in ("metrics", "params", "qasm", "manifest"):
        assert os.path.exists(paths[name]), name
    lines = open(paths["metrics"]).read().splitlines()
    assert lines[0] == "epoch,loss,exact_match_accuracy,per_bit_accuracy"
    assert len(lines) >= 2
    bindings = json.load(open(paths["params"]))
    assert all(isinstance(v, float) for v in bindings.values())
    circuit = read_qasm(open(paths["qasm"]).read())
    assert circuit.num_qubits == 4
    manifest = open(paths["manifest"]).read()
    assert "run.seed = 7" in manifest and "code.version" in manifest
    assert "time" not in manifest.lower()


def test_run_experiment_deterministic_bytes(tmp_path):
    a = run_experiment(_experiment(tmp_path, dirname="a"))
    b = run_experiment(_experiment(tmp_path, dirname="b"))
    for name in ("metrics", "params", "qasm", "manifest"):
        if name == "manifest":
            continue  # differs only in output_dir echo
        assert open(a[name]).read() == open(b[name]).read(), name


def test_run_experiment_requires_seed(tmp_path):
    cfg = _experiment(tmp_path)
    cfg.seed = None
    with pytest.raises(ConfigError, match="run.seed"):
        run_experiment(cfg)


def test_run_experiment_rejects_width_mismatch(tmp_path):
    data = tmp_path / "wide.txt"
    write_dataset(str(data), [TrainingExample((0, 0, 1), (0, 0, 0))])
    cfg = parse_config("""
network.n_database = 2
network.hidden_widths = 1
dataset.path = %s
run.seed = 1
""" % data)
    cfg.output_dir = str(tmp_path / "out")
    with pytest.raises(ConfigError, match="n_database"):
        run_experiment(cfg)


def test_qasm_artifact_matches_bound_network(tmp_path):
    cfg = _experiment(tmp_path, dirname="q")
    paths = run_experiment(cfg)
    bindings = json.load(open(paths["params"]))
    net = build_network(cfg.shape)
    expect = net.circuit.bind(bindings)
    assert read_qasm(open(paths["qasm"]).read()) == expect


# -- evaluate and grover demo ---------------------------------------------------

def test_evaluate_exact_and_shots():
    net = build_network(NetworkShape(1, (1,)))
    bindings = {p.name: 0.0 for p in net.parameters()}
    data = [TrainingExample((0,), (0,)), TrainingExample((1,), (0,))]
    exact = evaluate(net, bindings, data, LossConfig())
    assert exact["exact_match_accuracy"] == 1.0  # 0.5 marginals predict 0
    sampled = evaluate(net, bindings, data, LossConfig(), shots=2000, seed=1)
    assert abs(sampled["loss"] - exact["loss"]) < 0.1


def test_grover_demo_reports():
    out = grover_demo(2, [2])
    assert "analytic  1.000000000000" in out
    assert "simulated 1.000000000000" in out
    out = grover_demo(3, [5], iterations=2)
    assert "0.945312" in out
    with pytest.raises(ValueError):
        grover_demo(3, [])


# -- CLI ------------------------------------------------------------------------

def test_cli_grover_demo(capsys):
    assert main(["grover-demo", "--n", "2", "--marked", "2"]) == 0
    out = capsys.readouterr().out
    assert "abs diff" in out


def test_cli_grover_demo_rejects_empty_marked():
    with pytest.raises(SystemExit) as e:
        main(["grover-demo", "--n", "2", "--marked", ""])
    assert e.value.code == 2


def test_cli_gen_data_and_train_and_eval(tmp_path, capsys):
    data = str(tmp_path / "d.txt")
    assert main(["gen-data", "--rule", "mask_and", "--n", "1", "--count", "2",
                 "--mask", "1", "--seed", "3", "--out", data]) == 0
    cfgp = tmp_path / "cfg.txt"
    cfgp.write_text("network.n_database = 1\nnetwork.hidden_widths = 1\n"
                    "optimizer.max_epochs = 2\ndataset.path = %s\n" % data)
    outdir = str(tmp_path / "run")
    assert main(["train", "--config", str(cfgp), "--seed", "5",
                 "--out", outdir]) == 0
    capsys.readouterr()
    assert main(["eval", "--config", str(cfgp),
                 "--params", os.path.join(outdir, "params.json"),
                 "--data", data]) == 0
    out = capsys.readouterr().out
    assert "exact_match_accuracy" in out


def test_cli_export_qasm_zero_bound(tmp_path, capsys):
    cfgp = tmp_path / "cfg.txt"
    cfgp.write_text(MINIMAL)
    assert main(["export-qasm", "--config", str(cfgp), "--zero"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("OPENQASM 2.0;")
    assert read_qasm(out).num_qubits == 4


def test_cli_train_requires_seed(tmp_path):
    cfgp = tmp_path / "cfg.txt"
    cfgp.write_text(MINIMAL)
    with pytest.raises(SystemExit):
        main(["train", "--config", str(cfgp)])


def test_cli_bad_config_exits_2(tmp_path):
    cfgp = tmp_path / "cfg.txt"
    cfgp.write_text(MINIMAL + "bogus.key = 1\n")
    with pytest.raises(SystemExit) as e:
        main(["train", "--config", str(cfgp), "--seed", "1"])
    assert e.value.code == 2
