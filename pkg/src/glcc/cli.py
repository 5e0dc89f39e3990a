"""Command-line entry point: ``glcc generate|train|ablate|eval|sweep-k``.

Every command writes into its own run directory under ``--out`` (default:
``$GLCC_OUTPUT_ROOT`` or ``./glcc-runs``). The run id is a content hash of
the manifest inputs, so repeating a command with the same inputs lands in
the same directory with byte-identical artifacts.

Exit codes: 0 success, 2 usage or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from glcc import __version__
from glcc.errors import GLCCError
from glcc.graph import GraphDataset, load_dataset, mixture_from_config, save_snapshot, three_family_mixture
from glcc.metrics import evaluate_labels
from glcc.trainer import VARIANTS, TrainConfig, TrainingAborted, checkpoint, predict, restore, train

logger = logging.getLogger("glcc")

OUTPUT_ENV = "GLCC_OUTPUT_ROOT"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
ABLATION_FIELDS = ("variant", "nmi", "acc", "ari")


class UsageError(Exception):
    """Bad flags, config or input data (exit code 2)."""


# ---------------------------------------------------------------- helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_config(path: Optional[str]) -> dict:
    """Parse a YAML or JSON mapping. A run manifest is accepted too."""
    if path is None:
        return {}
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"{path}: not valid YAML/JSON ({exc})") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: top level must be a mapping")
    if doc.get("format") == "glcc-manifest":
        return dict(doc["config"])
    return doc


def output_root(out: Optional[str]) -> Path:
    return Path(out or os.environ.get(OUTPUT_ENV) or "glcc-runs")


def run_id(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def write_manifest(run_dir: Path, command: str, inputs: dict, rid: str, status: str = "ok") -> Path:
    artifacts = {
        p.name: _sha256(p) for p in sorted(run_dir.iterdir()) if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "format": "glcc-manifest",
        "glcc_version": __version__,
        "command": command,
        "run_id": rid,
        "output_dir": str(run_dir),
        "status": status,
        **inputs,
        "artifacts": artifacts,
    }
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def open_run(root: Path, command: str, inputs: dict) -> tuple[Path, str]:
    rid = run_id({"command": command, **inputs})
    run_dir = root / f"{command}-{rid}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir, rid


def load_data(path: Optional[str]) -> GraphDataset:
    if path is None:
        raise UsageError("--data is required")
    if not Path(path).exists():
        raise UsageError(f"data path not found: {path}")
    return load_dataset(path)


def build_train_config(args, doc: dict, ds: GraphDataset) -> TrainConfig:
    doc = dict(doc)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.epochs is not None:
        doc["epochs"] = args.epochs
    if args.k is not None:
        doc["k_neighbors"] = args.k
    if args.ratio is not None:
        doc["r"] = args.ratio
    if getattr(args, "variant", None):
        doc["variant"] = args.variant
    if "num_clusters" not in doc and "K" not in doc and ds.num_classes >= 2:
        doc["num_clusters"] = ds.num_classes
    return TrainConfig.from_dict(doc)


def _assignment_rows(fh, assignments: np.ndarray) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["graph_index", "cluster_id"])
    w.writerows(enumerate(int(a) for a in assignments))


def write_assignments(path: Path, assignments: np.ndarray) -> Path:
    with open(path, "w", newline="") as fh:
        _assignment_rows(fh, assignments)
    return path


def write_table(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _run_inputs(cfg: TrainConfig, ds: GraphDataset, data_path: str) -> dict:
    return {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "data": str(data_path),
        "dataset_fingerprint": ds.fingerprint(),
    }


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    doc = load_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if not doc:
        raise UsageError("empty dataset spec")
    if doc.get("preset") == "three_family":
        ds = three_family_mixture(
            count=int(doc.get("count", 100)),
            seed=int(doc.get("seed", 0)),
            feature_std=float(doc.get("feature_std", 1.5)),
        )
    else:
        ds = mixture_from_config(doc)
    inputs = {"spec": doc, "seed": int(doc.get("seed", 0)), "dataset_fingerprint": ds.fingerprint()}
    run_dir, rid = open_run(output_root(args.out), "generate", inputs)
    path = save_snapshot(ds, run_dir / "dataset.npz")
    write_manifest(run_dir, "generate", inputs, rid)
    print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    ds = load_data(args.data)
    cfg = build_train_config(args, load_config(args.config), ds)
    inputs = _run_inputs(cfg, ds, args.data)
    run_dir, rid = open_run(output_root(args.out), "train", inputs)
    ckpt = run_dir / "checkpoint.pt"
    try:
        state, assignments = train(ds, cfg, checkpoint_path=ckpt)
    except TrainingAborted as exc:
        (run_dir / "losses.csv").write_text(exc.state.history_csv())
        write_manifest(run_dir, "train", inputs, rid, status="aborted")
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    checkpoint(state, ckpt)
    (run_dir / "losses.csv").write_text(state.history_csv())
    write_assignments(run_dir / "assignments.csv", assignments)
    if ds.has_labels:
        report = evaluate_labels(assignments, ds.labels())
        (run_dir / "metrics.json").write_text(report.to_json() + "\n")
        print(report.to_json())
    write_manifest(run_dir, "train", inputs, rid)
    print(run_dir)
    return EXIT_OK


def _scores(ds: GraphDataset, cfg: TrainConfig):
    _, assignments = train(ds, cfg)
    r = evaluate_labels(assignments, ds.labels())
    return r.nmi, r.acc, r.ari


def cmd_ablate(args) -> int:
    ds = load_data(args.data)
    if not ds.has_labels:
        raise UsageError("ablation needs a labelled dataset")
    base = build_train_config(args, load_config(args.config), ds)
    names = args.only or sorted(VARIANTS)
    inputs = {**_run_inputs(base, ds, args.data), "variants": names}
    run_dir, rid = open_run(output_root(args.out), "ablate", inputs)
    rows = []
    for name in names:
        nmi, acc, ari = _scores(ds, base.with_variant(name))
        logger.info("%s: nmi=%.4f acc=%.4f ari=%.4f", name, nmi, acc, ari)
        rows.append([name, repr(nmi), repr(acc), repr(ari)])
    path = write_table(run_dir / "ablation.csv", ABLATION_FIELDS, rows)
    write_manifest(run_dir, "ablate", inputs, rid)
    print(path.read_text(), end="")
    return EXIT_OK


def cmd_sweep_k(args) -> int:
    ds = load_data(args.data)
    if not ds.has_labels:
        raise UsageError("the k sweep needs a labelled dataset")
    base = build_train_config(args, load_config(args.config), ds)
    ks = [k for k in args.k_values if k < len(ds)]
    inputs = {**_run_inputs(base, ds, args.data), "k_values": ks}
    run_dir, rid = open_run(output_root(args.out), "sweep-k", inputs)
    rows = []
    for k in ks:
        cfg = TrainConfig.from_dict({**base.to_dict(), "k_neighbors": k})
        nmi, acc, ari = _scores(ds, cfg)
        rows.append([k, repr(nmi), repr(acc), repr(ari)])
    path = write_table(run_dir / "sweep_k.csv", ("k", "nmi", "acc", "ari"), rows)
    write_manifest(run_dir, "sweep-k", inputs, rid)
    print(path.read_text(), end="")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.checkpoint is None:
        raise UsageError("--checkpoint is required")
    if not Path(args.checkpoint).exists():
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    state = restore(args.checkpoint)
    ds = load_data(args.data)
    K = state.cfg.num_clusters
    if ds.feature_dim != state.model.cfg.feature_dim:
        raise UsageError(f"data has {ds.feature_dim} node features, checkpoint expects {state.model.cfg.feature_dim}")
    if ds.has_labels and ds.num_classes != K:
        raise UsageError(f"checkpoint has K={K} clusters but the data has {ds.num_classes} classes")
    assignments = predict(state, ds)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_assignments(out / "assignments.csv", assignments)
    if ds.has_labels:
        print(evaluate_labels(assignments, ds.labels()).to_json())
    elif not args.out:
        _assignment_rows(sys.stdout, assignments)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _variant(s: str) -> str:
    if s not in VARIANTS:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(sorted(VARIANTS))}")
    return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glcc", description="Graph-level contrastive clustering.")
    p.add_argument("--version", action="version", version=f"glcc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON file")
    common.add_argument("--out", help=f"output root (default: ${OUTPUT_ENV} or ./glcc-runs)")
    common.add_argument("--seed", type=int)

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--data", help="TU dataset directory or .npz snapshot")
    training.add_argument("--epochs", type=int)
    training.add_argument("--k", type=int, help="neighbours per node in the affinity graph")
    training.add_argument("--ratio", type=float, help="fraction of graphs kept as pseudo-labels")

    g = sub.add_parser("generate", parents=[common], help="write a synthetic dataset snapshot")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", parents=[common, training], help="train and export assignments")
    t.add_argument("--variant", type=_variant, help="ablation variant M1..M5")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("ablate", parents=[common, training], help="run the M1..M5 ablation table")
    a.add_argument("--only", type=_variant, action="append", help="restrict to a variant (repeatable)")
    a.set_defaults(func=cmd_ablate)

    s = sub.add_parser("sweep-k", parents=[common, training], help="sensitivity to the neighbour count")
    s.add_argument("--variant", type=_variant)
    s.add_argument("--k-values", type=int, nargs="+", default=list(range(1, 11)))
    s.set_defaults(func=cmd_sweep_k)

    e = sub.add_parser("eval", help="score a checkpoint on a dataset")
    e.add_argument("--checkpoint")
    e.add_argument("--data")
    e.add_argument("--out", help="directory for assignments.csv")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except TrainingAborted as exc:
        print(f"glcc {args.command}: training aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, GLCCError, ValueError) as exc:
        # library input errors (bad data, bad parameters, corrupt files)
        print(f"glcc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"glcc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
