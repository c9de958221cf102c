"""Quadrature and Monte Carlo engines shared by the physics modules.

Integrands are vectorised: they take an ``(N, d)`` array of points and return
``(N,)`` values. Every routine returns an error estimate next to its value.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvergenceError

Integrand = Callable[[np.ndarray], np.ndarray]

DEFAULT_RTOL = float(os.environ.get("TIMEDIL_QUAD_RTOL", "1e-6"))


@functools.lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_panels(f: Integrand, edges: np.ndarray, n: int) -> np.ndarray:
    """Composite Gauss-Legendre over panels, batched over leading axes.

    ``edges`` has shape ``(..., P + 1)``; ``f`` receives nodes of shape
    ``(..., P, n)`` and must return the same shape.
    """
    x, w = gauss_legendre(n)
    a = edges[..., :-1, None]
    h = (edges[..., 1:] - edges[..., :-1])[..., None]
    vals = f(a + h * x)
    return np.sum(vals * w * h, axis=(-2, -1))


def gl_until_converged(f: Integrand, edges: np.ndarray, rtol: float = 1e-13,
                       n0: int = 16, n_max: int = 512) -> np.ndarray:
    """Order-doubling composite Gauss-Legendre; converges elementwise."""
    n = n0
    prev = gl_panels(f, edges, n)
    while n < n_max:
        n *= 2
        cur = gl_panels(f, edges, n)
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    n_cells: int
    n_evals: int

    @property
    def rel_error(self) -> float:
        if self.value == 0.0:
            return 0.0 if self.error == 0.0 else np.inf
        return abs(self.error / self.value)


def _tensor_rule(n: int, dim: int):
    x, w = gauss_legendre(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def _cell_estimates(f, lo, hi, rules, chunk=4096):
    """Return (high, low) order estimates for each cell."""
    (nh, wh), (nl, wl) = rules
    out_h = np.empty(len(lo))
    out_l = np.empty(len(lo))
    for s in range(0, len(lo), chunk):
        a = lo[s:s + chunk, None, :]
        span = (hi[s:s + chunk] - lo[s:s + chunk])[:, None, :]
        vol = np.prod(span[:, 0, :], axis=-1)
        ph = a + span * nh
        pl = a + span * nl
        k = len(ph)
        vh = f(ph.reshape(-1, ph.shape[-1])).reshape(k, -1)
        vl = f(pl.reshape(-1, pl.shape[-1])).reshape(k, -1)
        out_h[s:s + chunk] = vol * (vh @ wh)
        out_l[s:s + chunk] = vol * (vl @ wl)
    return out_h, out_l


def _split(lo, hi, scales):
    """Halve each cell along every axis at least half as long as its longest."""
    phys = (hi - lo) * scales
    mask = phys >= 0.5 * phys.max(axis=1, keepdims=True)
    children_lo, children_hi = [], []
    for pattern in range(1 << lo.shape[1]):
        bits = np.array([(pattern >> d) & 1 for d in range(lo.shape[1])], dtype=bool)
        # a pattern is valid for a cell only if it sets bits on split axes
        ok = np.all(~bits | mask, axis=1)
        if not ok.any():
            continue
        l, h = lo[ok].copy(), hi[ok].copy()
        mid = 0.5 * (l + h)
        m = mask[ok]
        upper = bits & m
        lower = ~bits & m
        l = np.where(upper, mid, l)
        h = np.where(lower, mid, h)
        children_lo.append(l)
        children_hi.append(h)
    return np.concatenate(children_lo), np.concatenate(children_hi)


def adaptive_cubature(
    f: Integrand,
    lo: Sequence[float],
    hi: Sequence[float],
    rtol: float = DEFAULT_RTOL,
    atol: float = 0.0,
    order: int = 5,
    scales: Sequence[float] | None = None,
    initial_splits: int = 2,
    feature_points: np.ndarray | None = None,
    feature_scale: float | None = None,
    max_cells: int = 400_000,
) -> QuadResult:
    """Globally adaptive h-refinement with tensor Gauss-Legendre cells.

    Each cell is integrated with orders ``order`` and ``order - 1``; their
    difference is the cell error. Cells are split along their long axes
    (physical length = parametric length * ``scales``), so thin slabs are not
    over-resolved across their thickness. Cells containing a
    ``feature_point`` are refined until their physical diameter is below
    ``feature_scale`` regardless of the error estimate.

    Does not raise on budget exhaustion; callers check ``rel_error``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dim = lo.size
    scales = np.ones(dim) if scales is None else np.asarray(scales, dtype=float)
    rules = (_tensor_rule(order, dim), _tensor_rule(order - 1, dim))
    evals_per_cell = order ** dim + (order - 1) ** dim

    cl, ch = lo[None, :], hi[None, :]
    for _ in range(initial_splits):
        cl, ch = _split(cl, ch, scales)

    done_val = 0.0
    done_err = 0.0
    qh, ql = _cell_estimates(f, cl, ch, rules)
    n_evals = len(cl) * evals_per_cell
    n_cells = len(cl)
    fp = None if feature_points is None else np.atleast_2d(np.asarray(feature_points, float))

    while True:
        err = np.abs(qh - ql)
        total = done_val + qh.sum()
        total_err = done_err + err.sum()
        tol = max(atol, rtol * abs(total))

        forced = np.zeros(len(cl), dtype=bool)
        if fp is not None and feature_scale is not None:
            diam = np.linalg.norm((ch - cl) * scales, axis=1)
            big = diam > feature_scale
            for p in fp:
                inside = np.all((p >= cl - 1e-12 * np.abs(p)) & (p <= ch + 1e-12 * np.abs(p)), axis=1)
                forced |= inside & big

        if total_err <= tol and not forced.any():
            break
        if n_cells >= max_cells:
            break

        order_idx = np.argsort(err)[::-1]
        cum = np.cumsum(err[order_idx])
        # refine the largest-error cells until what remains fits in half the budget
        remaining = total_err - cum
        n_ref = int(np.searchsorted(-remaining, -0.5 * tol)) + 1
        refine = np.zeros(len(cl), dtype=bool)
        if total_err > tol:
            refine[order_idx[:n_ref]] = True
        refine |= forced

        # cells that have converged far below tolerance are frozen
        keep = ~refine
        freeze = keep & (err < 1e-3 * tol / max(len(cl), 1))
        done_val += qh[freeze].sum()
        done_err += err[freeze].sum()
        stay = keep & ~freeze

        new_lo, new_hi = _split(cl[refine], ch[refine], scales)
        nh, nl = _cell_estimates(f, new_lo, new_hi, rules)
        n_evals += len(new_lo) * evals_per_cell
        n_cells += len(new_lo) - int(refine.sum())
        cl = np.concatenate([cl[stay], new_lo])
        ch = np.concatenate([ch[stay], new_hi])
        qh = np.concatenate([qh[stay], nh])
        ql = np.concatenate([ql[stay], nl])

    err = np.abs(qh - ql)
    return QuadResult(float(done_val + qh.sum()), float(done_err + err.sum()), n_cells, n_evals)


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (seed, stream id)."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    key = (int(stream) << 64) | (int(seed) & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class MCResult:
    value: float
    error: float  # one standard deviation
    n_samples: int

    @property
    def rel_error(self) -> float:
        return abs(self.error / self.value) if self.value else np.inf


def stratified_mc(
    f: Integrand,
    dim: int,
    n_samples: int,
    seed: int = 0,
    stream: int = 0,
    strata_per_dim: int = 2,
    stratified_dims: int | None = None,
    batch: int = 1 << 18,
) -> MCResult:
    """Stratified Monte Carlo over the unit hypercube ``[0, 1]^dim``.

    The first ``stratified_dims`` axes are cut into ``strata_per_dim`` equal
    slices; every stratum gets the same number of samples (at least two, so a
    within-stratum variance exists). The error is the usual stratified
    standard error, sum_j V_j^2 s_j^2 / n_j.
    """
    k = dim if stratified_dims is None else min(stratified_dims, dim)
    m = strata_per_dim
    n_strata = m ** k
    per = max(2, n_samples // n_strata)
    rng = philox_generator(seed, stream)
    vol = 1.0 / n_strata

    # stratum offsets in the stratified axes
    idx = np.indices([m] * k).reshape(k, -1).T if k else np.zeros((1, 0), int)
    sums = np.zeros(n_strata)
    sq = np.zeros(n_strata)

    strata_per_batch = max(1, batch // per)
    for s in range(0, n_strata, strata_per_batch):
        sl = idx[s:s + strata_per_batch]
        nb = len(sl)
        u = rng.random((nb, per, dim))
        u[..., :k] = (sl[:, None, :] + u[..., :k]) / m
        vals = f(u.reshape(-1, dim)).reshape(nb, per)
        sums[s:s + nb] = vals.sum(axis=1)
        sq[s:s + nb] = np.square(vals).sum(axis=1)

    mean = sums / per
    var = np.maximum(sq / per - mean ** 2, 0.0) * per / (per - 1)
    value = vol * mean.sum()
    error = np.sqrt(np.sum(vol ** 2 * var / per))
    return MCResult(float(value), float(error), per * n_strata)


def require(result, max_rel_error: float, what: str):
    if not result.rel_error <= max_rel_error:
        raise NonConvergenceError(
            f"{what}: relative error {result.rel_error:.3g} exceeds {max_rel_error:g}"
        )
    return result
