"""Depth sensitivity experiment: accuracy vs number of layers.

Generates the default synthetic bundle, then sweeps network depth for both
the aggregator-normalized model and its plain-diffusion reduction
(alpha = beta = 0, unit aggregation). The plain reduction degrades sharply
with depth while the skip/identity model stays flat.

Usage: python scripts/oversmoothing_depth_sweep.py [workdir]
"""

import sys
from pathlib import Path

from angcn.cli import cli_run


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs/depth_sweep")
    workdir.mkdir(parents=True, exist_ok=True)
    data = workdir / "bundle"
    out = workdir / "accuracy_vs_depth.csv"
    rc = cli_run(["synth", "--out", str(data), "--seed", "0"])
    if rc != 0:
        return rc
    rc = cli_run(["sweep-depth", "--data", str(data), "--out", str(out)])
    if rc != 0:
        return rc
    print(f"\nresults in {out}:")
    print(out.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
