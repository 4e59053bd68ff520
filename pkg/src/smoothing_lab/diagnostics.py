"""Empirical transforms of the fixed point and the survival-count statistics
that drive characteristic-function decay.

All estimators are pure folds over a sample pool; reductions use numpy's
pairwise summation, so results do not depend on chunking order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import as_generator
from .errors import EmptyTail, InsufficientDecay
from .models import ModelSpec, explicit_atoms

_PROBE_STREAM = 0xD1A6005E


def sphere_grid(dim: int, n: int) -> np.ndarray:
    """Deterministic probes on the full unit sphere (signed entries, L1 norm 1)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])[: max(n, 1)]
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(n) / n
        t = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        rng = as_generator(_PROBE_STREAM)
        t = rng.normal(size=(n, dim))
    return t / np.abs(t).sum(axis=1, keepdims=True)


def ecf_estimate(pool, t):
    """(empirical characteristic function at t, stderr bound K^(-1/2))."""
    t = np.asarray(t, dtype=float)
    phases = pool.samples @ t
    value = complex(np.exp(1j * phases).mean())
    return value, 1.0 / np.sqrt(pool.size)


def laplace_estimate(pool, t) -> float:
    """Empirical Laplace transform at t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("the Laplace probe must be nonnegative")
    return float(np.exp(-(pool.samples @ t)).mean())


@dataclass
class TransformCurve:
    """Sup over probe directions of the transform modulus, per radius."""

    radii: np.ndarray
    probe_directions: np.ndarray
    modulus: np.ndarray
    stderr: float
    fitted_exponent: tuple | None = None   # (a_hat, (lo, hi)) once fitted


def transform_curve(pool, radii=None, n_probes: int | None = None) -> TransformCurve:
    """Empirical sup-modulus curve over dyadic radii and a probe grid."""
    if radii is None:
        radii = 2.0 ** np.arange(0, 15)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    if n_probes is None:
        n_probes = 32 if pool.dim <= 2 else 128
    probes = sphere_grid(pool.dim, n_probes)
    base_phases = pool.samples @ probes.T          # (K, P)
    modulus = np.empty_like(radii)
    for i, r in enumerate(radii):
        vals = np.exp(1j * r * base_phases).mean(axis=0)
        modulus[i] = np.abs(vals).max()
    return TransformCurve(
        radii=radii, probe_directions=probes, modulus=modulus,
        stderr=1.0 / np.sqrt(pool.size),
    )


def decay_fit(curve: TransformCurve, max_modulus: float = 0.9,
              min_points: int = 5, n_boot: int = 500, seed=0):
    """(a_hat, (lo, hi)): least-squares decay exponent of the curve tail.

    Fits -slope of log modulus against log radius on the largest contiguous
    run of radii whose modulus stays below max_modulus; the confidence
    interval is a residual bootstrap.  InsufficientDecay when fewer than
    min_points radii qualify.
    """
    ok = curve.modulus < max_modulus
    # contiguous qualifying tail
    start = None
    for i in range(len(ok) - 1, -1, -1):
        if not ok[i]:
            break
        start = i
    if start is None or len(ok) - start < min_points:
        raise InsufficientDecay(
            f"only {0 if start is None else len(ok) - start} radii below "
            f"{max_modulus}"
        )
    x = np.log(curve.radii[start:])
    y = np.log(curve.modulus[start:])
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    a_hat = -coef[0]
    rng = as_generator(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        yb = design @ coef + rng.choice(resid, size=resid.size, replace=True)
        cb, *_ = np.linalg.lstsq(design, yb, rcond=None)
        boots[b] = -cb[0]
    lo, hi = np.quantile(boots, [0.025, 0.975])
    ci = (float(min(lo, a_hat)), float(max(hi, a_hat)))
    curve.fitted_exponent = (float(a_hat), ci)
    return float(a_hat), ci


# ---------------------------------------------------------------------------
# Survival counts
# ---------------------------------------------------------------------------


@dataclass
class KillCountStats:
    """Exact laws of the per-branch survival counts over probe and threshold
    grids.

    counts[i][j] maps a count value to its probability for probe t_grid[i]
    and threshold delta_grid[j]; means is the matching expectation table.
    """

    t_grid: np.ndarray
    delta_grid: np.ndarray
    counts: list
    means: np.ndarray

    def min_mean_per_delta(self) -> np.ndarray:
        return self.means.min(axis=0)

    def largest_stable_delta(self, margin: float) -> float | None:
        mins = self.min_mean_per_delta()
        ok = np.flatnonzero(mins > 1.0 + margin)
        if ok.size == 0:
            return None
        return float(self.delta_grid[ok.max()])


_ZERO_TOL = 1e-12


def _branch_counts(branch, t: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """#{i : |A_i^T t| > delta |t|} for one branch, per delta.

    At delta = 0 the comparison uses a relative dust threshold so that probe
    directions carrying one-ulp rounding noise still register exact kernel
    hits (matching the tree counter's zero test).
    """
    scale = np.abs(t).sum()
    vals = np.array([np.abs(a.T @ t).sum() for a in branch])
    thresholds = np.maximum(deltas, _ZERO_TOL) * scale
    return (vals[:, None] > thresholds[None, :]).sum(axis=0)


def kill_counts(spec: ModelSpec, t_grid, delta_grid, trials: int | None = None,
                seed=0) -> KillCountStats:
    """Survival-count statistics; exact finite-atom law by default.

    Passing `trials` switches to Monte Carlo over branch draws (useful as a
    cross-check of the exact path).  Probes may carry negative entries; the
    counts are invariant under positive scaling of each probe.
    """
    t_grid = np.atleast_2d(np.asarray(t_grid, dtype=float))
    delta_grid = np.asarray(delta_grid, dtype=float)
    if t_grid.shape[0] == 0 or delta_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(delta_grid < 0):
        raise ValueError("thresholds must be nonnegative")
    if not t_grid.any(axis=1).all():
        raise ValueError("probes must be nonzero")

    atoms = explicit_atoms(spec)
    if trials is not None:
        from .models import sample_branch

        rng = as_generator(seed)
        draws = [sample_branch(spec, rng).matrices for _ in range(trials)]
        atoms = [(1.0 / trials, list(br)) for br in draws]

    counts: list = []
    means = np.zeros((t_grid.shape[0], delta_grid.size))
    for i, t in enumerate(t_grid):
        laws = [dict() for _ in range(delta_grid.size)]
        for p, br in atoms:
            c = _branch_counts(br, t, delta_grid)
            for j, cj in enumerate(c):
                laws[j][int(cj)] = laws[j].get(int(cj), 0.0) + p
        counts.append(laws)
        means[i] = [sum(k * q for k, q in law.items()) for law in laws]
    return KillCountStats(t_grid=t_grid, delta_grid=delta_grid,
                          counts=counts, means=means)


# ---------------------------------------------------------------------------
# Harmonic moments and the small-ball exponent
# ---------------------------------------------------------------------------

HARMONIC_FLOORS = (1e-6, 1e-8, 1e-10)


def harmonic_floor_table(pool, b: float, floors=HARMONIC_FLOORS) -> dict:
    """Floored harmonic-moment estimates E[max(|Z|, floor)^(-b)] per floor."""
    if b <= 0:
        raise ValueError("the order b must be positive")
    norms = pool.norms()
    return {float(f): float(np.mean(np.maximum(norms, f) ** (-b))) for f in floors}


def harmonic_moment(pool, b: float, floor: float = 1e-8,
                    stability_rtol: float = 0.05):
    """(value, stable) floored harmonic moment of the pool norms.

    The empirical mean of |Z|^(-b) is always finite; divergence is
    operationalized as instability: the flag is True when successive floors
    in a fixed ladder move the estimate by less than stability_rtol.
    """
    norms = pool.norms()
    if b <= 0:
        raise ValueError("the order b must be positive")
    if floor <= 0:
        raise ValueError("floor must be positive")
    value = float(np.mean(np.maximum(norms, floor) ** (-b)))
    ladder = [float(np.mean(np.maximum(norms, f) ** (-b))) for f in HARMONIC_FLOORS]
    stable = all(
        abs(ladder[i + 1] - ladder[i]) <= stability_rtol * ladder[i]
        for i in range(len(ladder) - 1)
    )
    return value, stable


def small_ball_exponent(pool, eps_grid, n_boot: int = 60, seed=0):
    """(slope, (lo, hi)): regression of log P[|Z| <= eps] on log eps.

    EmptyTail when no sample falls below the largest grid value.  The
    confidence interval is a bootstrap over pool resamples.
    """
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    if np.any(eps_grid <= 0):
        raise ValueError("eps grid must be positive")
    norms = np.sort(pool.norms())
    k = norms.size
    counts = np.searchsorted(norms, eps_grid, side="right")
    if counts[-1] == 0:
        raise EmptyTail("no sample at or below the largest epsilon")
    keep = counts > 0
    if keep.sum() < 2:
        raise EmptyTail("fewer than two grid points are resolved by the pool")
    x = np.log(eps_grid[keep])
    design = np.vstack([x, np.ones_like(x)]).T

    def fit(csel) -> float:
        y = np.log(csel / k)
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return float(coef[0])

    slope = fit(counts[keep].astype(float))
    rng = as_generator(seed)
    boots = []
    for _ in range(n_boot):
        resampled = rng.choice(norms, size=k, replace=True)
        resampled.sort()
        cb = np.searchsorted(resampled, eps_grid[keep], side="right")
        if np.any(cb == 0):
            continue
        boots.append(fit(cb.astype(float)))
    if boots:
        lo, hi = np.quantile(boots, [0.025, 0.975])
        ci = (float(min(lo, slope)), float(max(hi, slope)))
    else:
        ci = (slope, slope)
    return slope, ci
