"""Batch-size sensitivity experiment: accuracy vs sampled-subgraph budget.

Each budget trains with minibatches drawn by the node sampler and the
aggregation matrix estimated from pre-training runs at that budget; the
largest budget collapses to full-batch training.

Usage: python scripts/batch_size_sweep.py [workdir]
"""

import sys
from pathlib import Path

from angcn.cli import cli_run


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs/batch_sweep")
    workdir.mkdir(parents=True, exist_ok=True)
    data = workdir / "bundle"
    out = workdir / "accuracy_vs_batch.csv"
    rc = cli_run(["synth", "--out", str(data), "--seed", "0"])
    if rc != 0:
        return rc
    rc = cli_run(["sweep-batch", "--data", str(data), "--out", str(out)])
    if rc != 0:
        return rc
    print(f"\nresults in {out}:")
    print(out.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
