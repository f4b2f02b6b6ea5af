"""Command-line entry points.

Subcommands: grover-demo, gen-data, train, eval, export-qasm.  Flags
mirror the experiment config; `--seed` is mandatory wherever randomness
enters (training init, dataset generation).
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ConfigError,
    GeneratorSpec,
    evaluate,
    gen_dataset,
    grover_demo,
    parse_config,
    read_dataset,
    run_experiment,
    write_dataset,
    _mask_bits,
    _map_table,
)
from .network import build_network
from .qasm import export_qasm


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igoqnn",
        description="Grover-oracular network simulator and trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grover-demo",
                       help="analytic vs simulated Grover success probability")
    g.add_argument("--n", type=int, required=True, help="index qubits")
    g.add_argument("--marked", required=True,
                   help="comma-separated marked entry indices")
    g.add_argument("--iterations", type=int, default=None)

    d = sub.add_parser("gen-data", help="generate a dataset file")
    d.add_argument("--rule", required=True,
                   choices=("mask_and", "fixed_map", "random_rule"))
    d.add_argument("--n", type=int, required=True, help="channels")
    d.add_argument("--count", type=int, required=True)
    d.add_argument("--mask", default=None, help="bit string, MSB first")
    d.add_argument("--table", default=None,
                   help="db:hits pairs, comma-separated, MSB first")
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--out", required=True)

    t = sub.add_parser("train", help="run a training experiment from a config")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", default=None, help="override run.output_dir")

    e = sub.add_parser("eval", help="evaluate saved parameters on a dataset")
    e.add_argument("--config", required=True)
    e.add_argument("--params", required=True, help="params.json from train")
    e.add_argument("--data", default=None, help="dataset file (default: config's)")
    e.add_argument("--shots", type=int, default=None,
                   help="sampled marginals instead of exact")
    e.add_argument("--seed", type=int, default=0)

    x = sub.add_parser("export-qasm", help="emit the bound network as OpenQASM 2.0")
    x.add_argument("--config", required=True)
    x.add_argument("--params", default=None, help="params.json with bindings")
    x.add_argument("--zero", action="store_true",
                   help="bind every parameter to 0.0")
    x.add_argument("--out", default=None, help="file (default: stdout)")
    return parser


def _read_config(path: str):
    with open(path) as f:
        return parse_config(f.read())


def _cmd_grover_demo(args) -> int:
    print(grover_demo(args.n,
                      [int(x) for x in args.marked.split(",") if x != ""],
                      args.iterations))
    return 0


def _cmd_gen_data(args) -> int:
    spec = GeneratorSpec(kind=args.rule, n=args.n, count=args.count,
                         mask=_mask_bits(args.mask) if args.mask else None,
                         table=_map_table(args.table) if args.table else None)
    dataset = gen_dataset(spec, args.seed)
    write_dataset(args.out, dataset)
    print(f"wrote {len(dataset)} examples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _read_config(args.config)
    config.seed = args.seed
    if args.out is not None:
        config.output_dir = args.out
    paths = run_experiment(config)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def _cmd_eval(args) -> int:
    config = _read_config(args.config)
    with open(args.params) as f:
        bindings = json.load(f)
    if args.data is not None:
        examples = read_dataset(args.data)
    elif config.dataset_path is not None:
        examples = read_dataset(config.dataset_path)
    else:
        examples = gen_dataset(config.generator, args.seed)
    network = build_network(config.shape, synapse_mode=config.synapse_mode,
                            flag_mode=config.flag_mode)
    metrics = evaluate(network, bindings, examples, config.loss,
                       shots=args.shots, seed=args.seed)
    for k in ("loss", "exact_match_accuracy", "per_bit_accuracy"):
        print(f"{k} {metrics[k]}")
    return 0


def _cmd_export_qasm(args) -> int:
    config = _read_config(args.config)
    network = build_network(config.shape, synapse_mode=config.synapse_mode,
                            flag_mode=config.flag_mode)
    if args.params is not None:
        with open(args.params) as f:
            bindings = json.load(f)
    elif args.zero:
        bindings = {p.name: 0.0 for p in network.parameters()}
    else:
        raise ConfigError("export-qasm: give --params or --zero")
    text = export_qasm(network.circuit, bindings)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "grover-demo": _cmd_grover_demo,
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "export-qasm": _cmd_export_qasm,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as e:
        parser.exit(2, f"error: {e}\n")


if __name__ == "__main__":
    raise SystemExit(main())
