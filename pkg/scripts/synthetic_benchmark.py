#!/usr/bin/env python3
"""
Synthetic Benchmark Script
Runs the simulator over several seeds and prints mean correlations per algorithm
"""

import argparse
import os
import sys
import time

import numpy as np

# Add repo root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from qrc.algorithms import bihits, qr
from qrc.config import QR1, QR2, ConvergenceConfig, SimConfig
from qrc.error_handling import setup_logging
from qrc.evaluation import CorrelationReport, correlation_report
from qrc.simulator import run_simulation

ALGORITHMS = {
    "biHITS": lambda net, config: bihits(net, config=config),
    "QR1": lambda net, config: qr(net, QR1, config),
    "QR2": lambda net, config: qr(net, QR2, config),
}


def main():
    """Average the correlation report over seeds"""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--n-users", type=int, default=1000)
    parser.add_argument("--steps", type=int, default=200)
    args = parser.parse_args()

    setup_logging("WARNING")
    config = ConvergenceConfig()
    collected = {name: [] for name in ALGORITHMS}

    print("🚀 Synthetic benchmark")
    print("=" * 60)
    for seed in range(args.seeds):
        started = time.time()
        sim = run_simulation(SimConfig(n_users=args.n_users, steps=args.steps, seed=seed))
        for name, run in ALGORITHMS.items():
            scores = run(sim.network, config)
            if not scores.converged:
                print(f"   ⚠️  {name} did not converge for seed {seed}")
                continue
            report = correlation_report(scores, sim.truth)
            collected[name].append([np.nan if v is None else v for v in report.as_dict().values()])
        print(f"   seed {seed}: M={sim.n_items} links={sim.network.edge_count} ({time.time() - started:.1f}s)")

    print("\n" + "=" * 60)
    print(f"{'':8}" + "".join(f"{name:>9}" for name in CorrelationReport.FIELDS))
    for name, rows in collected.items():
        if not rows:
            print(f"{name:8}   no converged runs")
            continue
        means = np.nanmean(np.asarray(rows), axis=0)
        print(f"{name:8}" + "".join(f"{m:9.2f}" for m in means))


if __name__ == "__main__":
    main()
