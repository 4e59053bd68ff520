"""Spectral functionals of the single-matrix law and its transfer operators.

Chain quantities (growth rates of norm moments, the Lyapunov exponent) are
estimated by Monte Carlo over products of i.i.d. matrices with periodic
renormalization.  The conditioned singleton-branch law additionally gets a
discretized transfer operator on the direction simplex whose leading
eigenvalue extends the moment growth rate to negative orders; its root
against 1/P[N = 1] is the critical harmonic-moment exponent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._common import as_generator, spawn_generators
from .errors import (
    FurstenbergKestenViolated,
    NoConvergence,
    RootNotBracketed,
    WitnessNotFound,
)
from .matrices import spectral_radius
from .models import (
    ModelSpec,
    conditioned_a1_atoms,
    expected_n,
    mu_atom_law,
    mu_mean,
    prob_n_equals,
)

_RENORM_EVERY = 32


# ---------------------------------------------------------------------------
# Chain Monte Carlo
# ---------------------------------------------------------------------------


def _chain_log_norms(law, n: int, trials: int, seed) -> np.ndarray:
    """log ||M_n ... M_1|| for `trials` independent chains drawn from `law`.

    law: list of (probability, matrix).  The running product is renormalized
    every few steps and the log scale accumulated, since the chains decay
    geometrically in the regimes of interest.
    """
    if n < 1:
        raise ValueError("chain length must be >= 1")
    rng = as_generator(seed)
    probs = np.array([p for p, _ in law])
    mats = [np.asarray(m, dtype=float) for _, m in law]
    d = mats[0].shape[0]
    prod = np.tile(np.eye(d), (trials, 1, 1))
    logscale = np.zeros(trials)
    for step in range(n):
        idx = rng.choice(len(mats), size=trials, p=probs)
        for j in np.unique(idx):
            sel = idx == j
            prod[sel] = np.matmul(mats[j], prod[sel])
        if (step + 1) % _RENORM_EVERY == 0:
            scale = np.abs(prod).sum(axis=1).max(axis=1)
            logscale += np.log(scale)
            prod /= scale[:, None, None]
    norms = np.abs(prod).sum(axis=1).max(axis=1)
    return logscale + np.log(norms)


def kappa_estimate(spec: ModelSpec, s: float, n: int, trials: int, seed):
    """(kappa_hat, stderr): n-th root of the mean of ||chain||^s.

    The standard error is propagated through the n-th root by the delta
    method.  s = 0 returns (1, 0) exactly.
    """
    if s == 0.0:
        return 1.0, 0.0
    logs = _chain_log_norms(mu_atom_law(spec), n, trials, seed)
    x = np.exp(s * logs)
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if trials > 1 else 0.0
    value = mean ** (1.0 / n)
    stderr = value * sd / (mean * n * np.sqrt(trials))
    return float(value), float(stderr)


def kappa_one_exact(spec: ModelSpec) -> float:
    """Exact growth rate of first norm moments: spectral radius of the
    single-matrix mean.  No Monte Carlo."""
    return spectral_radius(mu_mean(spec))


def m_of_s(spec: ModelSpec, s: float, n: int, trials: int, seed):
    """(E[N] * kappa_hat, scaled stderr)."""
    k, se = kappa_estimate(spec, s, n, trials, seed)
    en = expected_n(spec)
    return en * k, en * se


def lyapunov_estimate(spec: ModelSpec, n: int = 1000, trials: int = 10_000,
                      seed=0):
    """(gamma_hat, stderr): Monte Carlo mean of log||chain|| / n."""
    logs = _chain_log_norms(mu_atom_law(spec), n, trials, seed) / n
    sd = float(logs.std(ddof=1)) if trials > 1 else 0.0
    return float(logs.mean()), sd / np.sqrt(trials)


def find_alpha(spec: ModelSpec, tol: float = 1e-3, *, n: int = 64,
               trials: int = 40_000, seed=0, s_min: float = 1e-3,
               slope_step: float = 0.05) -> float:
    """Root of m(s) = 1 on (0, 1] with a negative-slope requirement.

    s = 1 is tried first through the exact path (E[N] times the spectral
    radius of the mean matrix).  Elsewhere one shared set of chains gives a
    smooth estimated curve m_hat(s), bisected for the first down-crossing.
    Raises WitnessNotFound when the curve stays above 1 on the whole
    interval or the crossing is not decreasing.
    """
    en = expected_n(spec)
    logs = _chain_log_norms(mu_atom_law(spec), n, trials, seed)

    def m_hat(s: float) -> float:
        if s == 0.0:
            return en
        return en * float(np.exp(s * logs).mean()) ** (1.0 / n)

    def slope_ok(s: float) -> bool:
        lo = max(s - slope_step, s_min / 2)
        hi = s + slope_step
        return m_hat(hi) - m_hat(lo) < 0.0

    m1_exact = en * kappa_one_exact(spec)
    if abs(m1_exact - 1.0) <= tol:
        if not slope_ok(1.0):
            raise WitnessNotFound("m(1) = 1 but the curve is not decreasing there")
        return 1.0

    grid = np.linspace(s_min, 1.0, 21)
    values = np.array([m_hat(s) for s in grid])
    below = np.flatnonzero(values <= 1.0)
    if below.size == 0:
        raise WitnessNotFound(f"m(s) > 1 on the whole grid (min {values.min():.4f})")
    hi_idx = below[0]
    if hi_idx == 0:
        raise WitnessNotFound("m(s) <= 1 already at the left edge")
    lo, hi = grid[hi_idx - 1], grid[hi_idx]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v = m_hat(mid)
        if abs(v - 1.0) <= tol and hi - lo < 1e-6:
            break
        if v > 1.0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    if abs(m_hat(alpha) - 1.0) > tol:
        raise WitnessNotFound("bisection failed to pin the root")
    if not slope_ok(alpha):
        raise WitnessNotFound("root found but the slope check failed")
    return float(alpha)


# ---------------------------------------------------------------------------
# Transfer operator on the direction simplex
# ---------------------------------------------------------------------------


@dataclass
class TransferDiscretization:
    """Gridded transfer operator for the singleton-branch law at order s."""

    s: float
    grid: np.ndarray                 # (G, d) unit-L1 directions
    operator_matrix: np.ndarray      # (G, G), entrywise nonnegative
    eigenvalue: float | None = None
    eigenfunction: np.ndarray | None = None
    eigenmeasure: np.ndarray | None = None
    residual: float | None = None    # max |P r - lambda r| after solving


def _simplex_grid(d: int, grid_size: int) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        x = np.linspace(0.0, 1.0, grid_size)
        return np.stack([x, 1.0 - x], axis=1)
    # deterministic lattice {k/m : |k| = m} with m chosen to reach grid_size
    from math import comb

    m = d
    while comb(m + d - 1, d - 1) < grid_size:
        m += 1
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], m, d)
    return np.array(pts, dtype=float) / m


def _interpolation_weights(grid: np.ndarray, points: np.ndarray):
    """Rows of a linear-interpolation matrix: indices and weights per point."""
    d = grid.shape[1]
    if d == 1:
        idx = np.zeros((points.shape[0], 1), dtype=np.int64)
        w = np.ones((points.shape[0], 1))
        return idx, w
    if d == 2:
        x = grid[:, 0]
        p = np.clip(points[:, 0], x[0], x[-1])
        hi = np.clip(np.searchsorted(x, p), 1, len(x) - 1)
        lo = hi - 1
        span = x[hi] - x[lo]
        t = np.where(span > 0, (p - x[lo]) / np.where(span > 0, span, 1.0), 0.0)
        idx = np.stack([lo, hi], axis=1)
        w = np.stack([1.0 - t, t], axis=1)
        return idx, w
    from scipy.spatial import Delaunay

    tri = Delaunay(grid[:, : d - 1])
    simplex = tri.find_simplex(points[:, : d - 1])
    idx = np.empty((points.shape[0], d), dtype=np.int64)
    w = np.empty((points.shape[0], d))
    for i, (pt, sx) in enumerate(zip(points[:, : d - 1], simplex)):
        if sx < 0:  # roundoff outside the hull: nearest grid point
            j = int(np.argmin(np.abs(grid - points[i]).sum(axis=1)))
            idx[i] = j
            w[i] = 0.0
            w[i, 0] = 1.0
            continue
        verts = tri.simplices[sx]
        T = tri.transform[sx]
        bary = T[: d - 1] @ (pt - T[d - 1])
        weights = np.append(bary, 1.0 - bary.sum())
        idx[i] = verts
        w[i] = np.clip(weights, 0.0, None)
        w[i] /= w[i].sum()
    return idx, w


def discretize_transfer(spec: ModelSpec, s: float,
                        grid_size: int = 512) -> TransferDiscretization:
    """Build the gridded operator f -> E[ |A v|^s f(A . v) ] for the
    singleton-branch law.

    Requires P[N = 1] > 0.  For the kernel to stay bounded every conditioned
    atom must map the whole simplex away from zero (guaranteed by a strictly
    positive entry ratio bound, and exactly equivalent to iota(atom) > 0).
    """
    atoms = conditioned_a1_atoms(spec)
    grid = _simplex_grid(spec.dim, grid_size)
    g = grid.shape[0]
    op = np.zeros((g, g))
    rows = np.arange(g)
    for p, a in atoms:
        img = grid @ a.T
        norms = img.sum(axis=1)
        if np.any(norms <= 0.0):
            raise FurstenbergKestenViolated(
                "a singleton-branch atom maps part of the simplex to zero"
            )
        dirs = img / norms[:, None]
        idx, w = _interpolation_weights(grid, dirs)
        mass = p * norms ** s
        for c in range(idx.shape[1]):
            np.add.at(op, (rows, idx[:, c]), mass * w[:, c])
    return TransferDiscretization(s=s, grid=grid, operator_matrix=op)


def transfer_apply(spec: ModelSpec, s: float, disc: TransferDiscretization,
                   f) -> np.ndarray:
    """Apply the exact finite-atom expectation gridwise to a grid function."""
    f = np.asarray(f, dtype=float)
    if disc.s != s:
        raise ValueError("discretization was built for a different order s")
    if f.shape != (disc.grid.shape[0],):
        raise ValueError("grid function has the wrong length")
    return disc.operator_matrix @ f


def transfer_eigen(disc: TransferDiscretization, tol: float = 1e-12,
                   max_iter: int = 20_000) -> TransferDiscretization:
    """Leading eigenvalue and eigen-elements by power iteration.

    Collatz bounds certify convergence: iteration stops when the min and max
    of (P f) / f agree to tolerance.  The adjoint iteration yields the
    probability eigenmeasure.
    """
    op = disc.operator_matrix
    g = op.shape[0]
    f = np.ones(g)
    lam = None
    for _ in range(max_iter):
        pf = op @ f
        ratios = pf / f
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * max(hi, 1e-300):
            lam = 0.5 * (lo + hi)
            f = pf / pf.max()
            break
        f = pf / pf.max()
    if lam is None:
        raise NoConvergence("transfer-operator power iteration stalled")
    nu = np.full(g, 1.0 / g)
    for _ in range(max_iter):
        pn = op.T @ nu
        lam_left = pn.sum()
        pn /= lam_left
        if np.abs(pn - nu).max() <= tol:
            nu = pn
            break
        nu = pn
    disc.eigenvalue = lam
    disc.eigenfunction = f
    disc.eigenmeasure = nu
    disc.residual = float(np.abs(op @ f - lam * f).max())
    return disc


def kappa_tilde(spec: ModelSpec, s: float, grid_size: int = 512,
                tol: float = 1e-12):
    """(value, eigenfunction, eigenmeasure) of the conditioned transfer
    operator at order s."""
    disc = transfer_eigen(discretize_transfer(spec, s, grid_size), tol=tol)
    return disc.eigenvalue, disc.eigenfunction, disc.eigenmeasure


def kappa_tilde_chain(spec: ModelSpec, s: float, n: int, trials: int, seed):
    """Chain Monte Carlo route to the conditioned moment growth rate."""
    if s == 0.0:
        return 1.0, 0.0
    logs = _chain_log_norms(conditioned_a1_atoms(spec), n, trials, seed)
    x = np.exp(s * logs)
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if trials > 1 else 0.0
    value = mean ** (1.0 / n)
    stderr = value * sd / (mean * n * np.sqrt(trials))
    return float(value), float(stderr)


def critical_exponent(spec: ModelSpec, tol: float = 1e-9,
                      a_max: float = 10.0, grid_size: int = 512):
    """Positive root of kappa_tilde(-a) P[N = 1] = 1, or None.

    None signals P[N = 1] = 0, where no singleton-branch thinning exists and
    harmonic moments are finite up to the weight-moment range.  The root is
    bisected using monotonicity of the conditioned growth rate in the order.
    """
    p1 = prob_n_equals(spec, 1)
    if p1 <= 0.0:
        return None

    def gap(a: float) -> float:
        value, _, _ = kappa_tilde(spec, -a, grid_size=grid_size)
        return value * p1 - 1.0

    lo = 1e-3
    if gap(lo) >= 0.0:
        raise RootNotBracketed("already past the root at the smallest order")
    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > a_max:
            raise RootNotBracketed(f"no root below a_max = {a_max}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= tol:
            return float(mid)
        if g < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return float(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# Profile driver
# ---------------------------------------------------------------------------


@dataclass
class SpectralProfile:
    """Estimated spectral curves plus the derived exponents."""

    s_grid: np.ndarray
    kappa: np.ndarray
    kappa_stderr: np.ndarray
    m: np.ndarray
    m_stderr: np.ndarray
    gamma: float
    gamma_stderr: float
    alpha: float | None
    kappa_tilde: dict = field(default_factory=dict)
    a0: float | None = None


def spectral_profile(spec: ModelSpec, s_grid=None, *, chain_n: int = 64,
                     chain_trials: int = 20_000, lyap_n: int = 1000,
                     lyap_trials: int = 10_000, grid_size: int = 512,
                     alpha_tol: float = 1e-3, seed=0) -> SpectralProfile:
    if s_grid is None:
        s_grid = np.arange(-1.5, 2.01, 0.25)
    s_grid = np.asarray(s_grid, dtype=float)
    streams = spawn_generators(seed, len(s_grid) + 2)

    kap = np.empty_like(s_grid)
    kse = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        kap[i], kse[i] = kappa_estimate(spec, float(s), chain_n, chain_trials,
                                        streams[i])
    en = expected_n(spec)
    gamma, gse = lyapunov_estimate(spec, lyap_n, lyap_trials, streams[-2])
    try:
        alpha = find_alpha(spec, tol=alpha_tol, seed=streams[-1])
    except WitnessNotFound:
        alpha = None
    kt: dict = {}
    a0 = None
    if prob_n_equals(spec, 1) > 0:
        for s in s_grid[s_grid <= 0]:
            value, _, _ = kappa_tilde(spec, float(s), grid_size=grid_size)
            kt[float(s)] = value
        a0 = critical_exponent(spec, grid_size=grid_size)
    return SpectralProfile(
        s_grid=s_grid, kappa=kap, kappa_stderr=kse,
        m=en * kap, m_stderr=en * kse,
        gamma=gamma, gamma_stderr=gse, alpha=alpha,
        kappa_tilde=kt, a0=a0,
    )
