"""Run the synthetic rank sweep over several seeds and summarize it.

    python3 scripts/run_benchmark.py [--config scripts/benchmark.cfg] [--seeds 0 1 2 3 4] [--out results]

Writes one ``sweep_seed<k>.csv`` per seed and prints, per (lambda, variant),
how many rows violate bound >= actual error and the Spearman correlation
between rank and each error column.
"""

import argparse
import os
import time

from scipy.stats import spearmanr

from balred.bench import BenchConfig, rows_to_csv, run_sweep

HERE = os.path.dirname(os.path.abspath(__file__))
COLUMNS = ("mean_err", "cov_err", "mean_bound", "cov_bound")


def summarize(rows):
    keys = sorted({(r.lam, r.variant) for r in rows})
    lines = [f"{'lambda':>8} {'variant':>7} {'viol':>4}  " + "  ".join(f"{c:>10}" for c in COLUMNS)]
    for lam, variant in keys:
        sel = [r for r in rows if r.lam == lam and r.variant == variant]
        viol = sum(r.cov_bound < r.cov_err or r.mean_bound < r.mean_err for r in sel)
        rhos = [spearmanr([r.rank for r in sel], [getattr(r, c) for r in sel]).statistic for c in COLUMNS]
        lines.append(f"{lam:>8g} {variant:>7} {viol:>4}  " + "  ".join(f"{x:>10.3f}" for x in rhos))
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=os.path.join(HERE, "benchmark.cfg"))
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--out", default="results")
    args = parser.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    for seed in args.seeds:
        config = BenchConfig.load(args.config, {"seed": str(seed)})
        t0 = time.perf_counter()
        rows = run_sweep(config)
        path = os.path.join(args.out, f"sweep_seed{seed}.csv")
        with open(path, "w") as fh:
            fh.write(rows_to_csv(rows))
        print(f"seed {seed}: {len(rows)} rows in {time.perf_counter() - t0:.1f} s -> {path}")
        print(summarize(rows))
        print()


if __name__ == "__main__":
    main()
