#!/usr/bin/env python3
# tresca-nitsche/main.py
"""
Command-Line Interface for the Tresca frictional contact solver.

Solves the linear elastic body pressed against a rigid foundation with
Tresca friction, reproduces the uniform and adaptive convergence tables,
runs the built-in verification checks and exports VTK files.

Usage:
    python main.py solve                          # One solve on the default 4x4 mesh
    python main.py uniform --levels 6             # Uniform convergence table
    python main.py adapt --n-threshold 8000       # Adaptive loop
    python main.py verify                         # Property checks
    python main.py export --cells-per-side 16     # Deformed mesh VTK
    python main.py uniform --config run.cfg --out results/run1

Exit Codes:
    0: Success
    1: Configuration or mesh parse error
    2: Solver failure (contact iteration did not converge, singular system)
       or a failed verification check
    3: I/O error
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

# Ensure src package is importable
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.config import RunConfig, convert_value, load_run_config
from src.experiments import RUNNERS, CheckResult, RunOutcome
from src.models import ConfigError, ContactNonConvergenceError, MeshError, SingularSystemError

# Subcommand -> RunConfig.mode
SUBCOMMANDS: Dict[str, str] = {
    "solve": "solve",
    "uniform": "uniform",
    "adapt": "adaptive",
    "verify": "verify",
    "export": "export",
}

# RunConfig keys exposed as --dashed-flags
OVERRIDE_KEYS: List[str] = [
    "youngs_modulus",
    "poisson_ratio",
    "gap",
    "friction_bound",
    "alpha",
    "order",
    "cells_per_side",
    "mesh_file",
    "levels",
    "n_threshold",
    "theta",
    "tolerance",
    "max_iterations",
    "active_set_mode",
]


def print_header(mode: str) -> None:
    """Print the CLI header."""
    print("\n" + "=" * 60)
    print("  TRESCA CONTACT - Nitsche finite element solver")
    print(f"  Mode: {mode}")
    print("=" * 60 + "\n")


def print_config(cfg: RunConfig) -> None:
    print(f"  E={cfg.youngs_modulus}, nu={cfg.poisson_ratio}, g={cfg.gap}, "
          f"kappa={cfg.friction_bound}, alpha={cfg.alpha}, order={cfg.order}")
    source = cfg.mesh_file if cfg.mesh_file is not None else f"unit square, {cfg.resolved_cells_per_side} cells/side"
    print(f"  Mesh: {source}")
    print(f"  Output: {cfg.output_dir}\n")


def print_results_table(outcome: RunOutcome) -> None:
    """
    Print the level records of a run as a table.

    Args:
        outcome: Result of a solve, uniform, adaptive or export run
    """
    print("\n" + "=" * 60)
    print("  RESULTS")
    print("=" * 60 + "\n")

    if outcome.uniform_rows:
        print(f"| {'h':>12} | {'N':>8} | {'||u_h||_1':>20} | {'eta':>12} |")
        print("|" + "-" * 14 + "|" + "-" * 10 + "|" + "-" * 22 + "|" + "-" * 14 + "|")
        for row in outcome.uniform_rows:
            print(f"| {row.h:>12.6f} | {row.n_dofs:>8} | {row.norm:>20.17f} | {row.eta:>12.6e} |")
    else:
        print(f"| {'level':>5} | {'N':>8} | {'||u_h||_1':>14} | {'eta':>12} | {'S':>10} | {'iter':>4} |")
        print("|" + "-" * 7 + "|" + "-" * 10 + "|" + "-" * 16 + "|" + "-" * 14 + "|" + "-" * 12 + "|" + "-" * 6 + "|")
        for r in outcome.records:
            print(f"| {r.level:>5} | {r.n_dofs:>8} | {r.norm:>14.10f} | {r.eta:>12.6e} | "
                  f"{r.s:>10.3e} | {r.iterations:>4} |")

    if outcome.final is not None:
        print(f"\n  Energy norm: {outcome.energy:.10f}")
        m = outcome.final.multipliers
        if m.lambda_t.size:
            print(f"  max lambda_n = {m.lambda_n.max():.6e}, max |lambda_t| = {abs(m.lambda_t).max():.6e}")

    print("\n  Files written:")
    for role, path in outcome.paths.items():
        print(f"    {role:<12} {path}")
    print("=" * 60 + "\n")


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Typed RunConfig values for every flag given on the command line.

    Raises:
        ConfigError: If a flag value cannot be converted
    """
    overrides: Dict[str, Any] = {}
    for key in OVERRIDE_KEYS:
        raw: Optional[str] = getattr(args, key)
        if raw is not None:
            overrides[key] = convert_value(key, raw)
    if args.out is not None:
        overrides["output_dir"] = args.out
    overrides["mode"] = SUBCOMMANDS[args.command]
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Tresca frictional contact solver (Nitsche method, adaptive FEM)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py solve                               # Default problem on a 4x4 mesh
  python main.py uniform --levels 6                  # Uniform table up to N=132098
  python main.py adapt --theta 0.5 --n-threshold 8000
  python main.py verify --order 1
  python main.py export --mesh-file my.mesh --out vtk/
        """
    )
    parser.add_argument("command", choices=list(SUBCOMMANDS), help="What to run")
    parser.add_argument("--config", "-c", type=str, default=None, help="key = value config file")
    parser.add_argument("--out", "-o", type=str, default=None, help="Output directory (default: output)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log every contact iteration")
    for key in OVERRIDE_KEYS:
        parser.add_argument(
            "--" + key.replace("_", "-"),
            dest=key,
            type=str,
            default=None,
            help=f"Override '{key}'",
        )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Returns:
        Exit code (see module docstring)
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg = load_run_config(args.config, collect_overrides(args))
    except ConfigError as e:
        print(f"ERROR: Invalid configuration: {e}")
        return 1
    except OSError as e:
        print(f"ERROR: Cannot read config file: {e}")
        return 3

    print_header(args.command)
    print_config(cfg)

    try:
        outcome = RUNNERS[cfg.mode](cfg)
    except (ConfigError, MeshError) as e:
        print(f"ERROR: {e}")
        return 1
    except (ContactNonConvergenceError, SingularSystemError) as e:
        print(f"ERROR: {e}")
        if e.partial_history:
            print(f"  {len(e.partial_history)} level(s) completed before the failure; partial table written")
        return 2
    except OSError as e:
        print(f"ERROR: I/O failure: {e}")
        return 3

    if cfg.mode == "verify":
        checks: List[CheckResult] = outcome
        failed = [c.name for c in checks if not c.passed]
        print(f"\n  {len(checks) - len(failed)}/{len(checks)} checks passed")
        if failed:
            print(f"  Failed: {', '.join(failed)}")
            return 2
        return 0

    print_results_table(outcome)
    return 0


if __name__ == "__main__":
    sys.exit(main())
