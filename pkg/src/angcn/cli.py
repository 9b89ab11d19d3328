"""Command-line driver.

Subcommands cover the whole pipeline: synthetic data generation, population
graph construction, sampler statistics, cross-validated training, checkpoint
evaluation, the depth and batch-size sweeps, and the gradient-check harness.

Configuration precedence for training options: command-line flag, then the
ANGCN_SEED environment variable (seed only), then --config file, then
defaults. All outputs are deterministic for a fixed seed and are written
atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import data as dataio
from .graph_core import Graph, add_self_loops, normalize_adjacency
from .metrics import confusion, pr_curve, roc_curve, scalar_metrics
from .model import forward, init_params, predict
from .popgraph import PopulationGraphSpec, auto_sigma, build_adjacency, rfe_ridge
from .sampler import aggregation_matrix, ones_gamma, presample
from .training import TrainConfig, cross_validate, finite_difference_check

GRADCHECK_TOLERANCE = 1e-4
DEFAULT_DEPTHS = (2, 4, 8, 12, 16, 20, 24, 30)
DEFAULT_BUDGETS = (50, 100, 200, 500, 1000)
# Sweeps compare model variants at matched training budgets; the deep stacks
# need far more epochs than the shallow ones to converge, so early stopping
# is disabled there by default.
SWEEP_EPOCHS = 300


def main() -> None:
    sys.exit(cli_run(sys.argv[1:]))


def cli_run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with TrainConfig fields")
    p.add_argument("--lr", type=float, default=None, help="learning rate")
    p.add_argument("--epochs", type=int, default=None, help="max training epochs")
    p.add_argument("--patience", type=int, default=None, help="early-stopping patience")
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds")
    p.add_argument("--alpha", type=float, default=None, help="skip-connection weight")
    p.add_argument("--beta", type=float, default=None, help="identity-mapping weight")
    p.add_argument("--layers", type=int, default=None, help="number of hidden layers")
    p.add_argument("--hidden", type=int, default=None, help="hidden width")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--batch-budget", type=int, default=None,
                   help="nodes per sampled minibatch (omit for full-batch)")
    p.add_argument("--sampler-runs", type=int, default=None,
                   help="pre-training sampler runs used to build the aggregation matrix")
    p.add_argument("--loss-reduction", choices=["sum", "mean"], default=None)
    p.add_argument("--sigma", type=float, default=None,
                   help="kernel width for graph construction (default: median heuristic)")
    p.add_argument("--rfe-dim", type=int, default=None,
                   help="reduce features to this many columns with ridge-RFE first")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="angcn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset bundle")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n-subjects", type=int, default=300)
    p.add_argument("--n-roi", type=int, default=16)
    p.add_argument("--class-separation", type=float, default=2.0)
    p.add_argument("--phenotype-informativeness", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("build-graph", help="build the population adjacency file")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--rfe-dim", type=int, default=None)
    p.set_defaults(func=_cmd_build_graph)

    p = sub.add_parser("sample-stats", help="run the sampler and export count statistics")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--adjacency", type=Path, default=None)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--budget", type=int, default=None, help="default: half the nodes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=None)
    p.set_defaults(func=_cmd_sample_stats)

    p = sub.add_parser("train", help="cross-validated training with full reporting")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--adjacency", type=Path, default=None)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a dataset")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep-depth", help="accuracy vs depth for both model variants")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--depths", type=str, default=",".join(map(str, DEFAULT_DEPTHS)))
    _add_train_flags(p)
    p.set_defaults(func=_cmd_sweep_depth)

    p = sub.add_parser("sweep-batch", help="accuracy vs sampled batch budget")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--budgets", type=str, default=None,
                   help="comma list; default 50,100,200,500,1000 capped at n")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_sweep_batch)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--eps", type=float, default=1e-5)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def resolve_config(args, defaults: TrainConfig | None = None) -> TrainConfig:
    """flag > ANGCN_SEED env (seed only) > config file > defaults."""
    values = asdict(defaults if defaults is not None else TrainConfig())
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"config file {args.config}: {exc}") from exc
        known = {f.name for f in fields(TrainConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise ValueError(f"config file has unknown keys: {sorted(unknown)}")
        values.update(file_values)
    env_seed = os.environ.get("ANGCN_SEED")
    if env_seed is not None:
        values["seed"] = int(env_seed)
    flag_map = {
        "lr": "learning_rate",
        "epochs": "max_epochs",
        "patience": "patience",
        "folds": "folds",
        "alpha": "alpha",
        "beta": "beta",
        "layers": "layers",
        "hidden": "hidden_dim",
        "seed": "seed",
        "batch_budget": "batch_budget",
        "sampler_runs": "sampler_runs",
        "loss_reduction": "loss_reduction",
    }
    for flag, key in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return TrainConfig(**values)


def _load_features(args) -> tuple[dataio.DatasetBundle, np.ndarray]:
    """Load the bundle and apply optional ridge-RFE column selection."""
    bundle = dataio.load_bundle(args.data)
    features = bundle.features
    rfe_dim = getattr(args, "rfe_dim", None)
    if rfe_dim is not None:
        pm1 = 2.0 * bundle.labels.astype(float) - 1.0
        keep = rfe_ridge(features, pm1, target_dim=rfe_dim)
        features = features[:, keep]
    return bundle, features


def _graph_for(args, bundle, features) -> tuple[Graph, float]:
    sigma = getattr(args, "sigma", None)
    adjacency = getattr(args, "adjacency", None)
    if adjacency is not None:
        g = dataio.load_adjacency(adjacency, n=features.shape[0])
        resolved = sigma if sigma is not None else auto_sigma(features)
        return g, resolved
    resolved = sigma if sigma is not None else auto_sigma(features)
    spec = PopulationGraphSpec(features=features, measures=bundle.phenotypes, sigma=resolved)
    return build_adjacency(spec), resolved


def _gamma_for(config: TrainConfig, g: Graph) -> tuple[np.ndarray, str]:
    """The aggregation matrix and a digest of how it was built.

    Full-batch aggregation is never restricted to a subgraph, so its
    normalization constants are the exhaustive-sampling ones (all 1).
    Sampled mode derives them from pre-training runs at the batch budget.
    """
    if config.batch_budget is None or config.batch_budget >= g.n:
        gamma = ones_gamma(g)
        digest = dataio.stats_digest(json.dumps({"mode": "exhaustive", "n": g.n}))
        return gamma, digest
    stats, _ = presample(g, runs=config.sampler_runs, budget=config.batch_budget,
                         seed=config.seed)
    gamma = aggregation_matrix(stats, g)
    return gamma, dataio.stats_digest(stats.to_json())


def _fold_metrics(y_true: np.ndarray, probs: np.ndarray) -> dict:
    scores = probs[:, 1]
    y_pred = probs.argmax(axis=1)
    m = scalar_metrics(confusion(y_true, y_pred))
    out = {k: m[k] for k in ("accuracy", "recall", "precision", "f1", "mcc", "kappa")}
    out["auc"] = roc_curve(scores, y_true).area
    out["degenerate"] = list(m["degenerate"])
    return out


def _aggregate(per_fold: list[dict]) -> dict:
    keys = ("accuracy", "auc", "f1", "recall", "precision", "kappa", "mcc")
    return {k: float(np.mean([fm[k] for fm in per_fold])) for k in keys}


def _write_curve(path: Path, curve) -> None:
    lines = [f"# kind={curve.kind} area={curve.area!r}", "x,y"]
    for x, y in curve.points:
        lines.append(f"{x!r},{y!r}")
    dataio._atomic_write(path, "\n".join(lines) + "\n")


def _cv_accuracy(config, g, gamma, features, labels) -> float:
    results = cross_validate(config, g, gamma, features, labels)
    accs = []
    for r in results:
        y_pred = r.probs.argmax(axis=1)
        accs.append(float(np.mean(y_pred == labels[r.test_idx])))
    return float(np.mean(accs))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    spec = dataio.SyntheticSpec(
        n_subjects=args.n_subjects,
        n_roi=args.n_roi,
        class_separation=args.class_separation,
        phenotype_informativeness=args.phenotype_informativeness,
        seed=args.seed,
    )
    bundle = dataio.generate_synthetic(spec)
    dataio.save_bundle(bundle, args.out)
    print(f"wrote {args.out}/features.csv ({bundle.features.shape[0]} subjects, "
          f"{bundle.features.shape[1]} features)")
    return 0


def _cmd_build_graph(args) -> int:
    bundle, features = _load_features(args)
    g, sigma = _graph_for(args, bundle, features)
    dataio.save_adjacency(g, args.out)
    print(f"wrote {args.out} ({len(g.edges)} edges, sigma={sigma:.6g})")
    return 0


def _cmd_sample_stats(args) -> int:
    bundle, features = _load_features(args)
    g, _ = _graph_for(args, bundle, features)
    budget = args.budget if args.budget is not None else -(-g.n // 2)
    stats, _ = presample(g, runs=args.runs, budget=budget, seed=args.seed)
    dataio._atomic_write(Path(args.out), stats.to_json() + "\n")
    print(f"wrote {args.out} (runs={stats.runs}, budget={budget})")
    return 0


def _cmd_train(args) -> int:
    config = resolve_config(args)
    bundle, features = _load_features(args)
    g, sigma = _graph_for(args, bundle, features)
    gamma, digest = _gamma_for(config, g)

    results = cross_validate(config, g, gamma, features, bundle.labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    per_fold = []
    pooled_true, pooled_scores = [], []
    history_lines = ["fold,epoch,train_loss,val_loss"]
    config_snapshot = asdict(config)
    config_snapshot["sigma_resolved"] = sigma
    for r in results:
        y_true = bundle.labels[r.test_idx]
        fm = _fold_metrics(y_true, r.probs)
        fm["fold"] = r.fold
        per_fold.append(fm)
        pooled_true.extend(int(v) for v in y_true)
        pooled_scores.extend(float(s) for s in r.probs[:, 1])
        for epoch, tr, vl in r.history:
            history_lines.append(f"{r.fold},{epoch},{tr!r},{vl!r}")
        dataio.save_checkpoint(
            out / f"checkpoint_fold{r.fold}.json",
            r.params,
            config={**config_snapshot, "fold": r.fold},
            gamma_digest=digest,
            seed=config.seed,
        )

    report = {"aggregate": _aggregate(per_fold), "folds": per_fold}
    dataio._atomic_write(out / "metrics.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    dataio._atomic_write(out / "history.csv", "\n".join(history_lines) + "\n")
    pooled_true = np.array(pooled_true)
    pooled_scores = np.array(pooled_scores)
    _write_curve(out / "roc.csv", roc_curve(pooled_scores, pooled_true))
    _write_curve(out / "pr.csv", pr_curve(pooled_scores, pooled_true))
    print(f"wrote {out}/metrics.json "
          f"(mean accuracy {report['aggregate']['accuracy']:.4f}, "
          f"mean auc {report['aggregate']['auc']:.4f})")
    return 0


def _cmd_eval(args) -> int:
    params, config_snapshot, digest, seed = dataio.load_checkpoint(args.checkpoint)
    bundle = dataio.load_bundle(args.data)
    features = bundle.features
    config_fields = {f.name for f in fields(TrainConfig)}
    config = TrainConfig(**{k: v for k, v in config_snapshot.items() if k in config_fields})

    sigma = config_snapshot.get("sigma_resolved")
    spec = PopulationGraphSpec(features=features, measures=bundle.phenotypes, sigma=sigma)
    g = build_adjacency(spec)
    gamma, rebuilt_digest = _gamma_for(replace(config, seed=seed), g)
    if rebuilt_digest != digest:
        raise ValueError(
            "aggregation statistics rebuilt from the checkpoint config do not match "
            f"the stored digest ({rebuilt_digest[:12]} != {digest[:12]})"
        )
    a_hat = normalize_adjacency(add_self_loops(g))
    probs = predict(forward(params, a_hat, gamma, features).logits)
    report = _fold_metrics(bundle.labels, probs)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        dataio._atomic_write(Path(args.out), text)
    print(text, end="")
    return 0


def _sweep_setup(args):
    sweep_defaults = TrainConfig(max_epochs=SWEEP_EPOCHS, patience=SWEEP_EPOCHS)
    config = resolve_config(args, defaults=sweep_defaults)
    bundle, features = _load_features(args)
    g, _ = _graph_for(args, bundle, features)
    return config, bundle, features, g


def _cmd_sweep_depth(args) -> int:
    config, bundle, features, g = _sweep_setup(args)
    depths = [int(d) for d in args.depths.split(",") if d]
    gamma_an, _ = _gamma_for(config, g)
    gamma_ones = ones_gamma(g)
    lines = ["depth,angcn_accuracy,gcn_accuracy"]
    for depth in depths:
        an_cfg = replace(config, layers=depth)
        gcn_cfg = replace(config, layers=depth, alpha=0.0, beta=0.0)
        acc_an = _cv_accuracy(an_cfg, g, gamma_an, features, bundle.labels)
        acc_gcn = _cv_accuracy(gcn_cfg, g, gamma_ones, features, bundle.labels)
        lines.append(f"{depth},{acc_an!r},{acc_gcn!r}")
        print(f"depth {depth}: angcn {acc_an:.4f}, gcn {acc_gcn:.4f}")
    dataio._atomic_write(Path(args.out), "\n".join(lines) + "\n")
    return 0


def _cmd_sweep_batch(args) -> int:
    config, bundle, features, g = _sweep_setup(args)
    if args.budgets:
        budgets = [int(b) for b in args.budgets.split(",") if b]
    else:
        budgets = [*DEFAULT_BUDGETS, g.n]
    # budgets above the graph size collapse to the full node set
    budgets = sorted({min(b, g.n) for b in budgets})
    lines = [
        f"# budgets capped at n_subjects={g.n}; larger requested values collapse to n",
        "budget,accuracy",
    ]
    for budget in budgets:
        cfg = replace(config, batch_budget=budget)
        gamma, _ = _gamma_for(cfg, g)
        acc = _cv_accuracy(cfg, g, gamma, features, bundle.labels)
        lines.append(f"{budget},{acc!r}")
        print(f"budget {budget}: accuracy {acc:.4f}")
    dataio._atomic_write(Path(args.out), "\n".join(lines) + "\n")
    return 0


def gradcheck_fixture(seed: int):
    """The canonical small model used by the gradient-check command:
    8 nodes, 5 input features, hidden width 4, 2 classes, 3 layers."""
    rng = np.random.default_rng(seed)
    n, f_in, f_hidden, n_classes, n_layers = 8, 5, 4, 2, 3
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < 0.45:
                edges.append((i, j, float(rng.uniform(0.5, 1.5))))
    g = Graph(n=n, edges=tuple(edges))
    a_hat = normalize_adjacency(add_self_loops(g))
    stats, _ = presample(g, runs=50, budget=4, seed=seed)
    gamma = aggregation_matrix(stats, g)
    x_raw = rng.normal(size=(n, f_in))
    labels = rng.integers(0, n_classes, size=n)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0
    labeled = np.arange(0, n, 2)
    params = init_params(f_in, f_hidden, n_classes, n_layers, alpha=0.1, beta=0.3, rng=rng)
    return params, a_hat * gamma, x_raw, onehot, labeled


def _cmd_gradcheck(args) -> int:
    params, op, x_raw, onehot, labeled = gradcheck_fixture(args.seed)
    start = time.perf_counter()
    err = finite_difference_check(params, op, x_raw, onehot, labeled, eps=args.eps)
    elapsed = time.perf_counter() - start
    print(f"max relative gradient error: {err:.3e} ({elapsed:.2f}s)")
    return 0 if err < GRADCHECK_TOLERANCE else 1
