"""Parallel Monte Carlo sweep of the top Lyapunov exponent over a (b, alpha)
grid and extraction of the zero contour.

Reproducibility model: every grid cell derives its per-seed noise streams
from splitmix64 hashes of (seed0, i, j, k), and cells are grouped into
batches that are a fixed function of the grid alone (pairs of consecutive
alpha rows).  Workers only decide WHO computes a batch, never what is in it,
so the estimates are bit-for-bit identical for any worker count.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .lyapunov import t_quantile_975
from .model import Params
from .noise import generator, mix64

_CELL_TAG = 0x6365
_CELL_INIT_TAG = 0x6369

ROWS_PER_BATCH = 2


@dataclass(frozen=True)
class GridSpec:
    """Sweep definition: grid geometry, base constants and per-cell budget."""

    b_min: float
    b_max: float
    b_steps: int
    alpha_min: float
    alpha_max: float
    alpha_steps: int
    a: float = 1.0
    beta: float = 1.0
    sigma: float = 1.0
    T: float = 2000.0
    seeds_per_cell: int = 4
    seed0: int = 0
    dt: float = 1e-3
    burn_in: float = 100.0
    renorm_every: int = 10
    refine: bool = True
    refine_T: float = 10000.0

    def __post_init__(self):
        # a 1x1 grid degenerates to a single-cell estimate and stays legal
        if self.b_steps < 1 or self.alpha_steps < 1:
            raise ValueError("grids need at least 1 step per axis")
        if self.T <= 0 or self.seeds_per_cell < 1:
            raise ValueError("need T > 0 and seeds_per_cell >= 1")

    def b_values(self):
        return np.linspace(self.b_min, self.b_max, self.b_steps)

    def alpha_values(self):
        return np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps)

    def cell_params(self, i, j):
        return Params(alpha=float(self.alpha_values()[i]), beta=self.beta,
                      a=self.a, b=float(self.b_values()[j]), sigma=self.sigma)

    def cell_seed(self, i, j, k):
        return mix64(self.seed0, _CELL_TAG, i, j, k)


@dataclass
class SweepResult:
    """Per-cell estimates indexed (alpha_index, b_index)."""

    grid: GridSpec
    values: np.ndarray
    ci: np.ndarray
    certified: np.ndarray
    failed: np.ndarray
    horizon: np.ndarray
    cpu_seconds: float = 0.0


@dataclass(frozen=True)
class CurveEstimate:
    """Sign-change locations of the top exponent, one or more per alpha row."""

    crossings: list = field(default_factory=list)   # (alpha, b_star, b_lo, b_hi)
    undetermined: list = field(default_factory=list)  # alpha values


def _run_cells(grid, cells, T):
    """Estimate lambda_top for the given cells at horizon T (one fixed batch).

    Returns (values, ci, failed) arrays aligned with ``cells``.  The batch
    stacks seeds_per_cell trajectories per cell; the cell estimate is the
    mean over seeds, its CI the Student-t half-width over seeds (falling
    back to the single run's batch-means CI when seeds_per_cell == 1).
    """
    ns = grid.seeds_per_cell
    A, B, sig, seeds, inits = [], [], [], [], []
    for (i, j) in cells:
        p = grid.cell_params(i, j)
        for k in range(ns):
            A.append(complex(p.alpha, p.beta))
            B.append(complex(p.a, -p.b))
            sig.append(p.sigma)
            cs = grid.cell_seed(i, j, k)
            seeds.append(cs)
            inits.append(_engine.sample_states(p, 1, generator(mix64(cs, _CELL_INIT_TAG)))[0])
    res = _engine.run_lyapunov_batch(np.array(A), np.array(B), np.array(sig),
                                     seeds, np.array(inits), T, grid.dt,
                                     grid.burn_in, grid.renorm_every)
    per_seed = res["sum1"] / res["t_eff"]
    values = np.empty(len(cells))
    ci = np.empty(len(cells))
    failed = np.zeros(len(cells), bool)
    tq = t_quantile_975(ns - 1) if ns > 1 else None
    for c in range(len(cells)):
        block = slice(c * ns, (c + 1) * ns)
        if res["failed"][block].any():
            failed[c] = True
            values[c] = np.nan
            ci[c] = np.inf
            continue
        vals = per_seed[block]
        values[c] = vals.mean()
        if ns > 1:
            ci[c] = tq * vals.std(ddof=1) / np.sqrt(ns)
        else:
            means = res["batch1"][c * ns] * (20 / res["t_eff"])
            ci[c] = t_quantile_975(19) * means.std(ddof=1) / np.sqrt(20)
    return values, ci, failed


def _base_batches(grid):
    """Fixed partition of the grid into batches of consecutive alpha rows."""
    rows = list(range(grid.alpha_steps))
    batches = []
    for r0 in range(0, len(rows), ROWS_PER_BATCH):
        chunk = rows[r0:r0 + ROWS_PER_BATCH]
        batches.append([(i, j) for i in chunk for j in range(grid.b_steps)])
    return batches


def _batch_task(args):
    grid, cells, T = args
    return _run_cells(grid, cells, T)


def sweep_top_lyapunov(grid, workers=1):
    """Sweep lambda_top over the grid; deterministic for any worker count.

    Per cell, averages ``seeds_per_cell`` independently seeded estimates at
    horizon grid.T; when ``grid.refine`` is set, cells adjacent to a raw
    sign change in their row are re-run at grid.refine_T (one fixed batch)
    before certification.  Cells whose integration blew up are flagged and
    excluded from contouring.
    """
    t_start = time.perf_counter()
    na, nb = grid.alpha_steps, grid.b_steps
    values = np.full((na, nb), np.nan)
    ci = np.full((na, nb), np.inf)
    failed = np.zeros((na, nb), bool)
    horizon = np.full((na, nb), grid.T)
    batches = _base_batches(grid)
    tasks = [(grid, cells, grid.T) for cells in batches]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_task, tasks))
    else:
        results = [_batch_task(t) for t in tasks]
    for cells, (v, c, f) in zip(batches, results):
        for (i, j), vv, cc, ff in zip(cells, v, c, f):
            values[i, j] = vv
            ci[i, j] = cc
            failed[i, j] = ff

    if grid.refine:
        refine_cells = []
        for i in range(na):
            for j in range(nb - 1):
                v0, v1 = values[i, j], values[i, j + 1]
                if np.isfinite(v0) and np.isfinite(v1) and np.sign(v0) != np.sign(v1):
                    refine_cells.extend([(i, j), (i, j + 1)])
        refine_cells = sorted(set(refine_cells))
        if refine_cells:
            v, c, f = _run_cells(grid, refine_cells, grid.refine_T)
            for (i, j), vv, cc, ff in zip(refine_cells, v, c, f):
                values[i, j] = vv
                ci[i, j] = cc
                failed[i, j] = ff
                horizon[i, j] = grid.refine_T

    certified = np.isfinite(values) & ~failed & (np.abs(values) > ci)
    return SweepResult(grid=grid, values=values, ci=ci, certified=certified,
                       failed=failed, horizon=horizon,
                       cpu_seconds=time.perf_counter() - t_start)


def zero_contour(result):
    """Locate sign changes of lambda_top per alpha row.

    Uses only certified cells (CI excluding zero): for each adjacent
    certified pair with opposite signs, linearly interpolates the zero in b
    between the cell centers.  Rows without a certified sign change are
    reported as undetermined; non-monotone rows report every crossing.
    """
    grid = result.grid
    bs = grid.b_values()
    alphas = grid.alpha_values()
    crossings = []
    undetermined = []
    for i in range(grid.alpha_steps):
        row_hits = []
        cols = [j for j in range(grid.b_steps) if result.certified[i, j]]
        for c0, c1 in zip(cols[:-1], cols[1:]):
            v0, v1 = result.values[i, c0], result.values[i, c1]
            if v0 * v1 < 0:
                b_star = bs[c0] + (bs[c1] - bs[c0]) * (0.0 - v0) / (v1 - v0)
                row_hits.append((float(alphas[i]), float(b_star), float(bs[c0]), float(bs[c1])))
        for j in cols:
            if result.values[i, j] == 0.0:
                row_hits.append((float(alphas[i]), float(bs[j]), float(bs[j]), float(bs[j])))
        if row_hits:
            crossings.extend(sorted(row_hits, key=lambda c: c[1]))
        else:
            undetermined.append(float(alphas[i]))
    return CurveEstimate(crossings=crossings, undetermined=undetermined)


def dump_sweep(result, stream, comment=None):
    """CSV `alpha,b,lambda_top,ci,certified` (one row per cell)."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("alpha,b,lambda_top,ci,certified\n")
    alphas = result.grid.alpha_values()
    bs = result.grid.b_values()
    for i, al in enumerate(alphas):
        for j, b in enumerate(bs):
            stream.write(f"{al:.17g},{b:.17g},{result.values[i, j]:.17g},"
                         f"{result.ci[i, j]:.17g},{int(result.certified[i, j])}\n")


def dump_contour(curve, stream, comment=None):
    """CSV `alpha,b_star,b_lo,b_hi`; undetermined rows get empty b fields."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write("alpha,b_star,b_lo,b_hi\n")
    for al, b_star, b_lo, b_hi in curve.crossings:
        stream.write(f"{al:.17g},{b_star:.17g},{b_lo:.17g},{b_hi:.17g}\n")
    for al in curve.undetermined:
        stream.write(f"{al:.17g},,,\n")
