"""Support machinery: semigroup enumeration, eigen-direction cones, radius
witnesses, and the greedy expansion used to fill segments of a ray.

The semigroup of the single-matrix law and the eigen-directions of its
strictly positive elements are infinite closures; everything here reports
finite-depth proxies with an explicit depth and a stability flag rather
than claiming the closure itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import DEFAULT_ELEMENT_BUDGET, resolve_budget
from .errors import NegativeInput, OutOfRange, WitnessNotFound
from .matrices import pf_decompose, spectral_radius
from .models import ModelSpec, explicit_atoms, mu_support

MATRIX_DEDUP_TOL = 1e-12
DIRECTION_DEDUP_TOL = 1e-10
_RADIUS_MARGIN = 1e-9


@dataclass(frozen=True)
class SemigroupEnumeration:
    """Products of the single-matrix generators up to a word length."""

    generators: tuple            # distinct matrices charged by the law
    max_length: int
    words: tuple                 # tuple of index tuples, () = identity
    elements: tuple              # matrices, words[i] multiplies to elements[i]


def enumerate_semigroup(spec_or_generators, max_length: int,
                        max_elements: int | None = None) -> SemigroupEnumeration:
    """Breadth-first products of the generators, deduplicated in max norm.

    Accepts a model (generators are the distinct single-matrix atoms) or an
    explicit list of matrices.  Words are recorded for the first
    representative of each distinct matrix.
    """
    if max_length < 0:
        raise ValueError("max_length must be >= 0")
    if isinstance(spec_or_generators, ModelSpec):
        gens = mu_support(spec_or_generators)
    else:
        gens = [np.asarray(g, dtype=float) for g in spec_or_generators]
    if not gens:
        raise ValueError("no generators")
    d = gens[0].shape[0]
    budget = resolve_budget(max_elements, DEFAULT_ELEMENT_BUDGET)

    words = [()]
    elements = [np.eye(d)]
    frontier = [((), np.eye(d))]

    def known(m) -> bool:
        return any(np.abs(m - e).max() < MATRIX_DEDUP_TOL for e in elements)

    from ._common import charge_budget

    for _ in range(max_length):
        new_frontier = []
        for word, mat in frontier:
            for gi, g in enumerate(gens):
                prod = mat @ g
                if known(prod):
                    continue
                charge_budget(len(elements) + 1, budget, "semigroup enumeration")
                entry = (word + (gi,), prod)
                words.append(entry[0])
                elements.append(entry[1])
                new_frontier.append(entry)
        frontier = new_frontier
        if not frontier:
            break
    return SemigroupEnumeration(
        generators=tuple(gens), max_length=max_length,
        words=tuple(words), elements=tuple(elements),
    )


def check_allowability(enum: SemigroupEnumeration) -> bool:
    """Every enumerated element has a positive entry in each row and column."""
    for m in enum.elements:
        if np.any((m > 0).sum(axis=1) == 0) or np.any((m > 0).sum(axis=0) == 0):
            return False
    return True


def check_positivity(enum: SemigroupEnumeration) -> bool:
    """Some enumerated element is entrywise strictly positive."""
    return any(np.all(m > 0) for m in enum.elements)


def lambda_set(enum: SemigroupEnumeration) -> list:
    """Perron eigen-directions of the strictly positive elements.

    Returns (direction, word) pairs deduplicated at a tight tolerance; the
    word is the first product that produced the direction.
    """
    found: list = []
    for word, m in zip(enum.words, enum.elements):
        if not np.all(m > 0):
            continue
        v = pf_decompose(m).right
        if any(np.abs(v - w).max() < DIRECTION_DEDUP_TOL for w, _ in found):
            continue
        found.append((v, word))
    return found


def lambda_stability(spec: ModelSpec, max_length: int, **kw) -> bool:
    """True when the direction set did not grow at the last depth increase."""
    if max_length < 1:
        return False
    prev = lambda_set(enumerate_semigroup(spec, max_length - 1, **kw))
    last = lambda_set(enumerate_semigroup(spec, max_length, **kw))
    if len(prev) != len(last):
        return False
    for v, _ in last:
        if not any(np.abs(v - w).max() < DIRECTION_DEDUP_TOL for w, _ in prev):
            return False
    return True


# ---------------------------------------------------------------------------
# Cones spanned by direction sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeHull:
    """Convex hull of a finite direction set on the unit simplex.

    Membership of x >= 0 means x = 0 or x/|x| is a convex combination of the
    directions; with max_terms >= d this equals combinations of at most
    max_terms directions by Caratheodory's theorem.  max_terms = 1 restricts
    to the rays themselves.
    """

    directions: np.ndarray       # (m, d) unit-L1
    max_terms: int
    extremes: np.ndarray         # (k, d) extreme points of the hull


def cone_hull(directions, max_terms: int) -> ConeHull:
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.shape[0] < 1:
        raise ValueError("need at least one direction")
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    sums = dirs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9) or np.any(dirs < 0):
        raise ValueError("directions must be nonnegative with unit L1 norm")

    keep: list = []
    for v in dirs:
        if not any(np.abs(v - w).max() < DIRECTION_DEDUP_TOL for w in keep):
            keep.append(v)
    dirs = np.array(keep)
    d = dirs.shape[1]
    if d <= 2 or dirs.shape[0] <= 2:
        lo = dirs[np.argmin(dirs[:, 0])]
        hi = dirs[np.argmax(dirs[:, 0])]
        extremes = np.unique(np.stack([lo, hi]), axis=0)
    else:
        try:
            from scipy.spatial import ConvexHull

            hull = ConvexHull(dirs[:, : d - 1], qhull_options="QJ")
            extremes = dirs[np.unique(hull.vertices)]
        except Exception:
            extremes = dirs  # degenerate (collinear) input: keep everything
    return ConeHull(directions=dirs, max_terms=max_terms, extremes=extremes)


def _simplex_membership(hull: ConeHull, xdir: np.ndarray, tol: float) -> bool:
    d = xdir.size
    if hull.max_terms == 1:
        return bool(np.min(np.abs(hull.directions - xdir).sum(axis=1)) <= tol)
    if d <= 2:
        xs = hull.directions[:, 0]
        return bool(xs.min() - tol <= xdir[0] <= xs.max() + tol)
    from scipy.optimize import linprog

    m = hull.directions.shape[0]
    res = linprog(
        c=np.zeros(m),
        A_eq=np.vstack([hull.directions.T, np.ones(m)]),
        b_eq=np.append(xdir, 1.0),
        bounds=[(0, None)] * m,
        method="highs",
    )
    if res.status == 0:
        return True
    # allow boundary slack: minimize infeasibility via L1 relaxation
    rows = d + 1
    res = linprog(
        c=np.concatenate([np.zeros(m), np.ones(2 * rows)]),
        A_eq=np.hstack([
            np.vstack([hull.directions.T, np.ones(m)]),
            np.eye(rows), -np.eye(rows),
        ]),
        b_eq=np.append(xdir, 1.0),
        bounds=[(0, None)] * (m + 2 * rows),
        method="highs",
    )
    return bool(res.status == 0 and res.fun <= tol)


def membership(hull: ConeHull, x, tol: float = 1e-9) -> bool:
    """Whether x >= 0 lies in the cone over the hull (scale invariant)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeInput("membership is defined on the nonnegative cone")
    s = x.sum()
    if s <= tol:
        return True
    return _simplex_membership(hull, x / s, tol)


def membership_fractions(hull: ConeHull, dirs: np.ndarray,
                         tol: float = 1e-9) -> np.ndarray:
    """Vectorized membership for an (n, d) stack of unit-L1 directions."""
    if hull.directions.shape[1] <= 2 and hull.max_terms > 1:
        xs = hull.directions[:, 0]
        return (dirs[:, 0] >= xs.min() - tol) & (dirs[:, 0] <= xs.max() + tol)
    return np.array([_simplex_membership(hull, v, tol) for v in dirs])


def empirical_support_check(pool, hull: ConeHull, tol: float = 1e-9):
    """(inside_fraction, coverage_gaps) of a sample pool against a cone.

    inside_fraction is the share of nonzero samples whose direction lies in
    the hull; coverage_gaps gives, per hull extreme, the smallest L1
    distance from any sample direction (extremes of the true support should
    be approached by samples).
    """
    dirs = pool.nonzero_directions()
    if dirs.shape[0] == 0:
        raise ValueError("pool holds no nonzero samples")
    inside = membership_fractions(hull, dirs, tol)
    gaps = np.empty(hull.extremes.shape[0])
    for i, e in enumerate(hull.extremes):
        gaps[i] = np.abs(dirs - e).sum(axis=1).min()
    return float(inside.mean()), gaps


# ---------------------------------------------------------------------------
# Small and large radius witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusWitness:
    """A strictly positive realization sum with its certificate word."""

    matrix: np.ndarray
    radius: float
    word: tuple        # atom indices whose branch sums were multiplied

    def describe(self) -> str:
        return "*".join(f"Y[{b}]" for b in self.word)


@dataclass(frozen=True)
class RadiusSearchResult:
    small: RadiusWitness | None
    large: RadiusWitness | None
    depth: int


def search_radius_witnesses(spec: ModelSpec, depth_budget: int = 3,
                            max_elements: int | None = None) -> RadiusSearchResult:
    """Bounded search for strictly positive products of branch-sum
    realizations with spectral radius on either side of 1.

    Stage k multiplies k realizations of the branch sum; the cheapest
    certificates (single realizations) come first.  Not finding a witness
    within the budget is not a disproof.
    """
    if depth_budget < 1:
        raise ValueError("depth_budget must be >= 1")
    budget = resolve_budget(max_elements, DEFAULT_ELEMENT_BUDGET)
    atoms = explicit_atoms(spec)
    sums = [np.sum(br, axis=0) for _, br in atoms]

    small = large = None

    def consider(word, mat):
        nonlocal small, large
        if not np.all(mat > 0):
            return
        r = spectral_radius(mat)
        if small is None and r <= 1.0 - _RADIUS_MARGIN:
            small = RadiusWitness(matrix=mat, radius=r, word=word)
        if large is None and r >= 1.0 + _RADIUS_MARGIN:
            large = RadiusWitness(matrix=mat, radius=r, word=word)

    from ._common import charge_budget

    frontier = [((), np.eye(spec.dim))]
    seen = 0
    for depth in range(1, depth_budget + 1):
        new_frontier = []
        for word, mat in frontier:
            for bi, y in enumerate(sums):
                seen += 1
                charge_budget(seen, budget, "radius witness search")
                prod = mat @ y
                entry = (word + (bi,), prod)
                consider(*entry)
                if small is not None and large is not None:
                    return RadiusSearchResult(small=small, large=large, depth=depth)
                new_frontier.append(entry)
        frontier = new_frontier
    return RadiusSearchResult(small=small, large=large, depth=depth_budget)


def find_l1_l2(spec: ModelSpec, depth_budget: int = 3,
               max_elements: int | None = None):
    """(small, large) radius witnesses; WitnessNotFound when either side is
    missing within the budget."""
    res = search_radius_witnesses(spec, depth_budget, max_elements)
    if res.small is None or res.large is None:
        missing = []
        if res.small is None:
            missing.append("radius < 1")
        if res.large is None:
            missing.append("radius > 1")
        raise WitnessNotFound(
            f"no strictly positive witness with {' or '.join(missing)} "
            f"within depth {depth_budget}"
        )
    return res.small, res.large


# ---------------------------------------------------------------------------
# Greedy expansion in a base theta
# ---------------------------------------------------------------------------


def dyadic_expand(x: float, theta: float, n_terms: int) -> np.ndarray:
    """Greedy bit sequence (eta_1, ..., eta_n) with sum eta_i theta^i <= x.

    Defined for theta in [1/2, 1) and 0 <= x <= theta / (1 - theta); the
    partial sums never exceed x and the reconstruction error after n terms
    is at most theta^n / (1 - theta).
    """
    if not 0.5 <= theta < 1.0:
        raise ValueError("theta must lie in [1/2, 1)")
    if n_terms < 0:
        raise ValueError("n_terms must be >= 0")
    cap = theta / (1.0 - theta)
    if not 0.0 <= x <= cap:
        raise OutOfRange(f"x = {x} outside [0, {cap}]")
    bits = np.zeros(n_terms, dtype=np.int64)
    partial = 0.0
    power = 1.0
    for i in range(n_terms):
        power *= theta
        if partial + power <= x:
            partial += power
            bits[i] = 1
    return bits


def dyadic_reconstruct(bits, theta: float) -> float:
    bits = np.asarray(bits)
    powers = theta ** np.arange(1, bits.size + 1)
    return float((bits * powers).sum())
