# tresca-nitsche/src/utils.py
"""
Shared numerical utilities for the Tresca contact solver.

Provides the sparse direct solve with Dirichlet elimination, the chunked
thread-pool helper used by assembly and estimation, and the log-log
slope fit used for convergence rates.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import config
from .models import SingularSystemError

# Configure logging
logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_bounds(n_items: int, chunk_size: int = config.ASSEMBLY_CHUNK_SIZE) -> List[tuple]:
    """Split range(n_items) into fixed (start, stop) chunks."""
    return [(start, min(start + chunk_size, n_items)) for start in range(0, n_items, chunk_size)]


def map_chunks(
    func: Callable[[int, int], T],
    n_items: int,
    chunk_size: int = config.ASSEMBLY_CHUNK_SIZE,
) -> List[T]:
    """
    Apply func(start, stop) to fixed chunks of range(n_items).

    Chunks run on a thread pool sized by `config.worker_count()`. Results come
    back in chunk order, so merging them is deterministic regardless of the
    number of threads.

    Args:
        func: Work on one chunk; must not mutate shared state
        n_items: Number of items (elements, facets) to cover
        chunk_size: Items per chunk

    Returns:
        List of per-chunk results in chunk order
    """
    bounds = chunk_bounds(n_items, chunk_size)
    workers = min(config.worker_count(), len(bounds))
    if workers <= 1:
        return [func(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: func(*b), bounds))


def assemble_coo(
    rows: Sequence[np.ndarray],
    cols: Sequence[np.ndarray],
    values: Sequence[np.ndarray],
    size: int,
) -> sp.csr_matrix:
    """Sum per-chunk triplets into one CSR matrix (duplicates are added)."""
    if not rows:
        return sp.csr_matrix((size, size))
    matrix = sp.coo_matrix(
        (np.concatenate([v.ravel() for v in values]),
         (np.concatenate([r.ravel() for r in rows]), np.concatenate([c.ravel() for c in cols]))),
        shape=(size, size),
    )
    return matrix.tocsr()


def solve_symmetric(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    fixed_dofs: np.ndarray,
    fixed_values: Optional[np.ndarray] = None,
    check_definite: bool = True,
) -> np.ndarray:
    """
    Solve A x = b with prescribed values on `fixed_dofs`.

    The fixed columns are moved to the right-hand side, then fixed rows and
    columns are replaced by the identity. The reduced system is factorized
    with SuperLU in symmetric mode with diagonal pivoting, so a negative or
    zero pivot means A is not positive definite on the free dofs.

    Args:
        matrix: Symmetric sparse system matrix
        rhs: Right-hand side
        fixed_dofs: Indices with prescribed values
        fixed_values: Values at fixed_dofs (zeros if None)
        check_definite: Raise on a non-positive pivot

    Returns:
        Solution vector with the prescribed values in place

    Raises:
        SingularSystemError: If the matrix is singular or indefinite
    """
    n = matrix.shape[0]
    fixed_dofs = np.asarray(fixed_dofs, dtype=np.int64)
    values = np.zeros(len(fixed_dofs)) if fixed_values is None else np.asarray(fixed_values, float)
    logger.debug(f"Solving system of size {n} with {len(fixed_dofs)} fixed dofs")

    x_fixed = np.zeros(n)
    x_fixed[fixed_dofs] = values
    b = np.asarray(rhs, dtype=float) - matrix @ x_fixed
    b[fixed_dofs] = values

    keep = np.ones(n)
    keep[fixed_dofs] = 0.0
    mask = sp.diags(keep)
    unit = np.zeros(n)
    unit[fixed_dofs] = 1.0
    reduced = (mask @ matrix @ mask + sp.diags(unit)).tocsc()

    try:
        lu = splu(
            reduced,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as e:
        raise SingularSystemError(f"factorization failed: {e}") from e

    if check_definite:
        pivots = lu.U.diagonal()
        if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(pivots <= 0):
            n_bad = int(np.count_nonzero(pivots <= 0))
            raise SingularSystemError(f"system matrix is not positive definite ({n_bad} non-positive pivots)")

    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("solution contains non-finite values")
    x[fixed_dofs] = values
    return x


def loglog_slope(n_values: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(n_values)."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def relative_asymmetry(matrix: sp.spmatrix) -> float:
    """max|A - A^T| / max|A| (0 for the zero matrix)."""
    scale = abs(matrix).max()
    if scale == 0:
        return 0.0
    return float(abs(matrix - matrix.T).max() / scale)
