# tresca-nitsche/benchmark.py
"""
Convergence benchmark for the Tresca contact solver.

Runs the uniform mesh family and the adaptive loop on the reference
problem, fits the convergence rates of the estimator and writes CSV
tables plus a markdown report to results/.
"""

import os
import shutil
import sys
from datetime import datetime
from typing import List, Optional

import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.config import RunConfig
from src.experiments import run_adaptive, run_uniform
from src.export import write_table
from src.models import AdaptiveRecord, TrescaError
from src.utils import loglog_slope

# Reference values of the uniform table (h, N, ||u_h||_1, eta)
REFERENCE_UNIFORM = [
    (0.3535533905932738, 162, 0.12512491088285752, 0.024313763514359765),
    (0.1767766952966369, 578, 0.12521228022856246, 0.01433158681806633),
    (0.08838834764831845, 2178, 0.12533660448538167, 0.008507952881306404),
    (0.04419417382415922, 8450, 0.12536196044032774, 0.00505894403542394),
    (0.02209708691207961, 33282, 0.12537688747083747, 0.003033564404895748),
    (0.011048543456039806, 132098, 0.12538238166705057, 0.0018265267263056603),
]

# Reference adaptive end point (N, eta)
REFERENCE_ADAPTIVE = (7946, 6.027e-4)

UNIFORM_LEVELS = 5
ADAPTIVE_THRESHOLD = 8000
RATE_WINDOW = 6


def run_uniform_family(levels: int = UNIFORM_LEVELS) -> Optional[pd.DataFrame]:
    """Run the uniform family and return its table joined with the reference values."""
    print(f"\n{'='*60}")
    print(f"UNIFORM FAMILY ({levels} levels)")
    print(f"{'='*60}")
    try:
        outcome = run_uniform(RunConfig(mode="uniform", levels=levels, output_dir="output/benchmark"))
    except TrescaError as e:
        print(f"  ERROR: uniform family failed - {e}")
        return None

    rows = []
    for row, ref in zip(outcome.uniform_rows, REFERENCE_UNIFORM):
        rows.append({
            "h": row.h,
            "N": row.n_dofs,
            "norm": row.norm,
            "eta": row.eta,
            "norm_ref": ref[2],
            "eta_ref": ref[3],
            "norm_rel_diff": abs(row.norm - ref[2]) / ref[2],
            "eta_rel_diff": abs(row.eta - ref[3]) / ref[3],
        })
        print(f"    ✓ N={row.n_dofs}: norm={row.norm:.8f}, eta={row.eta:.4e}")
    return pd.DataFrame(rows)


def run_adaptive_family(threshold: int = ADAPTIVE_THRESHOLD) -> Optional[pd.DataFrame]:
    """Run the adaptive loop up to `threshold` dofs and return its history."""
    print(f"\n{'='*60}")
    print(f"ADAPTIVE FAMILY (N >= {threshold})")
    print(f"{'='*60}")
    try:
        outcome = run_adaptive(RunConfig(mode="adaptive", n_threshold=threshold, output_dir="output/benchmark"))
    except TrescaError as e:
        print(f"  ERROR: adaptive family failed - {e}")
        return None

    records: List[AdaptiveRecord] = outcome.records
    for r in records:
        print(f"    ✓ level {r.level}: N={r.n_dofs}, eta={r.eta:.4e}, S={r.s:.2e}")
    return pd.DataFrame([r.to_row() for r in records])


def fitted_rate(df: pd.DataFrame, window: Optional[int] = None) -> float:
    """Slope of log(eta) against log(N), over the last `window` rows if given."""
    tail = df if window is None else df.tail(window)
    if len(tail) < 2:
        return float("nan")
    return loglog_slope(tail["N"].to_numpy(), tail["eta"].to_numpy())


def generate_markdown_report(
    uniform: Optional[pd.DataFrame],
    adaptive: Optional[pd.DataFrame],
    output_dir: str,
    timestamp: str,
) -> str:
    """Write the human-readable report and return its path."""
    filename = f"{output_dir}/REPORT_{timestamp}.md"
    with open(filename, "w", encoding="utf-8") as f:
        f.write("# Tresca Contact Convergence Report\n\n")
        f.write(f"**Generated:** {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n\n")
        f.write("Problem: (-0.5, 0.5)^2 clamped at x = -0.5, contact at x = 0.5, ")
        f.write("g = -0.1, E = 1, nu = 0.3, kappa = 0.2, alpha = 1e-3, quadratic elements.\n\n")
        f.write("---\n\n")

        if uniform is not None:
            f.write("## Uniform Meshes\n\n")
            f.write("| h | N | norm | eta | norm vs ref | eta vs ref |\n")
            f.write("|:--|--:|-----:|----:|------------:|-----------:|\n")
            for _, r in uniform.iterrows():
                f.write(
                    f"| {r['h']:.6f} | {int(r['N'])} | {r['norm']:.10f} | {r['eta']:.4e} | "
                    f"{r['norm_rel_diff']:.2e} | {r['eta_rel_diff'] * 100:.2f}% |\n"
                )
            f.write(f"\n**Fitted rate:** eta ~ N^{fitted_rate(uniform):.3f}\n\n")
            f.write("---\n\n")

        if adaptive is not None:
            f.write("## Adaptive Meshes\n\n")
            f.write("| level | N | norm | eta | S | iterations |\n")
            f.write("|------:|--:|-----:|----:|--:|-----------:|\n")
            for _, r in adaptive.iterrows():
                f.write(
                    f"| {int(r['level'])} | {int(r['N'])} | {r['norm']:.10f} | {r['eta']:.4e} | "
                    f"{r['S']:.2e} | {int(r['iterations'])} |\n"
                )
            f.write(f"\n**Fitted rate (last {RATE_WINDOW} levels):** eta ~ N^{fitted_rate(adaptive, RATE_WINDOW):.3f}\n\n")
            f.write(f"Reference end point: N = {REFERENCE_ADAPTIVE[0]}, eta = {REFERENCE_ADAPTIVE[1]:.3e}\n\n")
            f.write("---\n\n")

        if uniform is not None and adaptive is not None and len(uniform) >= 4:
            eta_uniform = float(uniform.iloc[3]["eta"])
            eta_adaptive = float(adaptive.iloc[-1]["eta"])
            f.write("## Summary\n\n")
            f.write("| Family | N | eta |\n")
            f.write("|:-------|--:|----:|\n")
            f.write(f"| Uniform | {int(uniform.iloc[3]['N'])} | {eta_uniform:.4e} |\n")
            f.write(f"| Adaptive | {int(adaptive.iloc[-1]['N'])} | {eta_adaptive:.4e} |\n\n")
            f.write(f"**Winner:** Adaptive reduces eta by a factor **{eta_uniform / eta_adaptive:.2f}**\n\n")

        f.write("---\n")
        f.write("*Report generated by benchmark.py*\n")
    return filename


def main():
    """Run the full benchmark suite."""
    print("=" * 60)
    print("TRESCA CONTACT BENCHMARK SUITE")
    print("=" * 60)

    os.makedirs("results", exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

    uniform = run_uniform_family()
    adaptive = run_adaptive_family()

    print(f"\n{'='*60}")
    print("GENERATING SUMMARY FILES")
    print("=" * 60)

    if uniform is not None:
        path = write_table(uniform, f"results/uniform_{timestamp}.csv")
        print(f"✓ Saved: {path}")
    if adaptive is not None:
        path = write_table(adaptive, f"results/adaptive_{timestamp}.csv")
        print(f"✓ Saved: {path}")
    report = generate_markdown_report(uniform, adaptive, "results", timestamp)
    print(f"✓ Saved: {report}")

    shutil.copy(report, "results/LATEST_REPORT.md")
    print("\n✓ Updated LATEST_REPORT.md")

    print(f"\n{'='*60}")
    print("BENCHMARK COMPLETE")
    print(f"{'='*60}")
    return 0 if uniform is not None and adaptive is not None else 2


if __name__ == "__main__":
    sys.exit(main())
