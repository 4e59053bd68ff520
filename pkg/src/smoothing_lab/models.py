"""Finite-atom models of the branch point process (N, A_1, ..., A_N).

Three declaration styles are supported:

* ``ExplicitAtoms``: the joint law is a finite list of (probability, branch)
  pairs, each branch a nonempty list of nonzero nonnegative matrices.
* ``IIDCoefficients``: N has a finite law and, given N = n, the branch is n
  i.i.d. draws from a finite single-matrix law.
* ``ScalarRandomized``: a fixed base branch is multiplied by one random
  positive scalar drawn from a finite law (the scalar is shared across the
  whole branch).

Everything downstream (exact expectations, conditional laws, samplers) works
through this module so that the finite-atom arithmetic stays in one place.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._common import DEFAULT_ELEMENT_BUDGET, as_generator, resolve_budget
from .errors import BudgetExceeded, NoSingletonBranch
from .matrices import check_nonneg_matrix

KIND_EXPLICIT = "ExplicitAtoms"
KIND_IID = "IIDCoefficients"
KIND_SCALAR = "ScalarRandomized"
_KINDS = (KIND_EXPLICIT, KIND_IID, KIND_SCALAR)

_PROB_TOL = 1e-12
_MATRIX_TOL = 1e-12


@dataclass(frozen=True)
class BranchSample:
    """One realization of (N, A_1, ..., A_N)."""

    n: int
    matrices: tuple

    def __post_init__(self):
        if self.n != len(self.matrices):
            raise ValueError("n must equal the number of matrices")


def _check_prob_list(ps, what: str) -> None:
    ps = np.asarray(ps, dtype=float)
    if ps.size == 0:
        raise ValueError(f"{what}: empty probability list")
    if np.any(ps <= 0) or np.any(ps > 1):
        raise ValueError(f"{what}: probabilities must lie in (0, 1]")
    if abs(ps.sum() - 1.0) > _PROB_TOL:
        raise ValueError(f"{what}: probabilities sum to {ps.sum()!r}, not 1")


def _check_branch(branch, dim: int, what: str) -> tuple:
    if len(branch) == 0:
        raise ValueError(f"{what}: empty branch (N = 0 is not allowed)")
    out = []
    for m in branch:
        m = check_nonneg_matrix(m)
        if m.shape[0] != dim:
            raise ValueError(f"{what}: matrix dimension {m.shape[0]} != {dim}")
        if not m.any():
            raise ValueError(f"{what}: zero matrix in branch")
        out.append(m)
    return tuple(out)


@dataclass(frozen=True)
class ModelSpec:
    """Validated finite-atom description of the branch law."""

    dim: int
    kind: str
    atoms: tuple | None = None          # ((prob, (matrix, ...)), ...)
    n_law: tuple | None = None          # ((n, prob), ...)
    mu_atoms: tuple | None = None       # ((prob, matrix), ...)
    base_branch: tuple | None = None    # (matrix, ...)
    scalar_law: tuple | None = None     # ((prob, value), ...)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == KIND_EXPLICIT:
            if not self.atoms:
                raise ValueError("ExplicitAtoms requires atoms")
            checked = []
            for prob, branch in self.atoms:
                checked.append((float(prob), _check_branch(branch, self.dim, "atom")))
            object.__setattr__(self, "atoms", tuple(checked))
            _check_prob_list([p for p, _ in checked], "atoms")
        elif self.kind == KIND_IID:
            if not self.n_law or not self.mu_atoms:
                raise ValueError("IIDCoefficients requires n_law and mu_atoms")
            nl = tuple((int(n), float(p)) for n, p in self.n_law)
            if any(n < 1 for n, _ in nl):
                raise ValueError("n_law values must be >= 1 (N = 0 is not allowed)")
            _check_prob_list([p for _, p in nl], "n_law")
            mu = tuple(
                (float(p), _check_branch([m], self.dim, "mu atom")[0])
                for p, m in self.mu_atoms
            )
            _check_prob_list([p for p, _ in mu], "mu_atoms")
            object.__setattr__(self, "n_law", nl)
            object.__setattr__(self, "mu_atoms", mu)
        else:
            if not self.base_branch or not self.scalar_law:
                raise ValueError("ScalarRandomized requires base_branch and scalar_law")
            base = _check_branch(self.base_branch, self.dim, "base branch")
            sl = tuple((float(p), float(x)) for p, x in self.scalar_law)
            if any(x <= 0 for _, x in sl):
                raise ValueError("scalar_law values must be positive")
            _check_prob_list([p for p, _ in sl], "scalar_law")
            object.__setattr__(self, "base_branch", base)
            object.__setattr__(self, "scalar_law", sl)
        en = expected_n(self)
        if not en > 1.0:
            raise ValueError(f"E[N] = {en} must exceed 1")


def expected_n(spec: ModelSpec) -> float:
    if spec.kind == KIND_EXPLICIT:
        return float(sum(p * len(br) for p, br in spec.atoms))
    if spec.kind == KIND_IID:
        return float(sum(p * n for n, p in spec.n_law))
    return float(len(spec.base_branch))


def explicit_atoms(spec: ModelSpec, max_atoms: int | None = None) -> list:
    """The joint branch law as a flat list of (probability, branch) pairs.

    For IIDCoefficients this enumerates the product law per value of N, which
    is exponential in N; the budget guard keeps desk-scale use honest.
    """
    budget = resolve_budget(max_atoms, DEFAULT_ELEMENT_BUDGET)
    if spec.kind == KIND_EXPLICIT:
        return [(p, list(br)) for p, br in spec.atoms]
    if spec.kind == KIND_SCALAR:
        return [
            (p, [x * m for m in spec.base_branch])
            for p, x in spec.scalar_law
        ]
    total = sum(len(spec.mu_atoms) ** n for n, _ in spec.n_law)
    if total > budget:
        raise BudgetExceeded(
            f"expanding the i.i.d. law needs {total} atoms, budget {budget}"
        )
    out = []
    for n, pn in spec.n_law:
        for combo in itertools.product(spec.mu_atoms, repeat=n):
            prob = pn * float(np.prod([q for q, _ in combo]))
            out.append((prob, [m for _, m in combo]))
    return out


def sample_branch(spec: ModelSpec, seed) -> BranchSample:
    """Draw one branch realization; deterministic given the seed."""
    rng = as_generator(seed)
    if spec.kind == KIND_EXPLICIT:
        probs = [p for p, _ in spec.atoms]
        _, branch = spec.atoms[rng.choice(len(spec.atoms), p=probs)]
        mats = tuple(branch)
    elif spec.kind == KIND_IID:
        n = spec.n_law[rng.choice(len(spec.n_law), p=[p for _, p in spec.n_law])][0]
        mu_p = [p for p, _ in spec.mu_atoms]
        idx = rng.choice(len(spec.mu_atoms), size=n, p=mu_p)
        mats = tuple(spec.mu_atoms[i][1] for i in idx)
    else:
        _, x = spec.scalar_law[
            rng.choice(len(spec.scalar_law), p=[p for p, _ in spec.scalar_law])
        ]
        mats = tuple(x * m for m in spec.base_branch)
    return BranchSample(n=len(mats), matrices=mats)


def mean_sum_matrix(spec: ModelSpec) -> np.ndarray:
    """Exact E[A_1 + ... + A_N]."""
    if spec.kind == KIND_IID:
        mu = sum(p * m for p, m in spec.mu_atoms)
        return expected_n(spec) * mu
    if spec.kind == KIND_SCALAR:
        ex = sum(p * x for p, x in spec.scalar_law)
        return ex * sum(spec.base_branch)
    out = np.zeros((spec.dim, spec.dim))
    for p, br in spec.atoms:
        out += p * sum(br)
    return out


def mu_mean(spec: ModelSpec) -> np.ndarray:
    """Mean of the size-biased single-matrix law: mean_sum / E[N]."""
    return mean_sum_matrix(spec) / expected_n(spec)


def _merge_weighted(pairs) -> list:
    """Merge (weight, matrix) pairs whose matrices agree within tolerance."""
    merged: list = []
    for w, m in pairs:
        for i, (wi, mi) in enumerate(merged):
            if mi.shape == m.shape and np.abs(mi - m).max() < _MATRIX_TOL:
                merged[i] = (wi + w, mi)
                break
        else:
            merged.append((w, m))
    return merged


def mu_atom_law(spec: ModelSpec) -> list:
    """Atoms of the size-biased single-matrix law: weight of m is
    E[#{i <= N : A_i = m}] / E[N]."""
    if spec.kind == KIND_IID:
        return [(p, m) for p, m in spec.mu_atoms]
    en = expected_n(spec)
    pairs = []
    for p, br in explicit_atoms(spec):
        for m in br:
            pairs.append((p / en, m))
    return _merge_weighted(pairs)


def mu_support(spec: ModelSpec) -> list:
    """Distinct matrices charged by the single-matrix law."""
    return [m for _, m in mu_atom_law(spec)]


def prob_n_equals(spec: ModelSpec, k: int) -> float:
    """Exact P[N = k]."""
    if k < 1:
        return 0.0
    if spec.kind == KIND_IID:
        return float(sum(p for n, p in spec.n_law if n == k))
    if spec.kind == KIND_SCALAR:
        return 1.0 if len(spec.base_branch) == k else 0.0
    return float(sum(p for p, br in spec.atoms if len(br) == k))


def conditioned_a1_atoms(spec: ModelSpec) -> list:
    """Law of A_1 conditioned on {N = 1}, as (probability, matrix) atoms."""
    p1 = prob_n_equals(spec, 1)
    if p1 <= 0:
        raise NoSingletonBranch("P[N = 1] = 0 for this model")
    if spec.kind == KIND_IID:
        return [(p, m) for p, m in spec.mu_atoms]
    if spec.kind == KIND_SCALAR:
        return [(p, x * spec.base_branch[0]) for p, x in spec.scalar_law]
    pairs = [(p / p1, br[0]) for p, br in spec.atoms if len(br) == 1]
    return _merge_weighted(pairs)


def a1_marginal_atoms(spec: ModelSpec) -> list:
    """Unconditional law of A_1 (the first branch matrix)."""
    if spec.kind == KIND_IID:
        return [(p, m) for p, m in spec.mu_atoms]
    if spec.kind == KIND_SCALAR:
        return [(p, x * spec.base_branch[0]) for p, x in spec.scalar_law]
    return _merge_weighted([(p, br[0]) for p, br in spec.atoms])


def check_furstenberg_kesten(spec: ModelSpec) -> tuple:
    """(holds, c): every A_1 realization strictly positive with entry ratio <= c.

    c is the smallest admissible constant over atoms; infinity when some
    realization has a zero entry.
    """
    worst = 1.0
    for _, m in a1_marginal_atoms(spec):
        if np.any(m <= 0):
            return False, float("inf")
        worst = max(worst, float(m.max() / m.min()))
    return True, worst


def check_iid_coefficients(spec: ModelSpec, tol: float = 1e-9) -> bool:
    """Whether, given N, the branch matrices are conditionally i.i.d.

    Exact finite-atom test: each positional marginal must match the
    size-biased single-matrix law, and each conditional branch probability
    must factorize as the product of marginal masses.
    """
    if spec.kind == KIND_IID:
        return True
    mu = mu_atom_law(spec)

    def mu_mass(m) -> float | None:
        for q, mm in mu:
            if np.abs(mm - m).max() < _MATRIX_TOL:
                return q
        return None

    atoms = explicit_atoms(spec)
    by_n: dict = {}
    for p, br in atoms:
        by_n.setdefault(len(br), []).append((p, br))
    for n, group in by_n.items():
        pn = sum(p for p, _ in group)
        for p, br in group:
            masses = []
            for m in br:
                q = mu_mass(m)
                if q is None:
                    return False
                masses.append(q)
            if abs(p / pn - float(np.prod(masses))) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# JSON serialization and the bundled example models
# ---------------------------------------------------------------------------

def model_to_dict(spec: ModelSpec) -> dict:
    out = {"dim": spec.dim, "kind": spec.kind}
    if spec.kind == KIND_EXPLICIT:
        out["atoms"] = [
            {"prob": p, "branch": [m.tolist() for m in br]} for p, br in spec.atoms
        ]
    elif spec.kind == KIND_IID:
        out["n_law"] = [{"n": n, "prob": p} for n, p in spec.n_law]
        out["mu_atoms"] = [{"prob": p, "matrix": m.tolist()} for p, m in spec.mu_atoms]
    else:
        out["base_branch"] = [m.tolist() for m in spec.base_branch]
        out["scalar_law"] = [{"prob": p, "value": x} for p, x in spec.scalar_law]
    return out


def model_from_dict(data: dict) -> ModelSpec:
    kind = data.get("kind")
    dim = data.get("dim")
    if kind == KIND_EXPLICIT:
        atoms = tuple(
            (a["prob"], tuple(np.array(m, dtype=float) for m in a["branch"]))
            for a in data["atoms"]
        )
        return ModelSpec(dim=dim, kind=kind, atoms=atoms)
    if kind == KIND_IID:
        return ModelSpec(
            dim=dim,
            kind=kind,
            n_law=tuple((a["n"], a["prob"]) for a in data["n_law"]),
            mu_atoms=tuple(
                (a["prob"], np.array(a["matrix"], dtype=float))
                for a in data["mu_atoms"]
            ),
        )
    if kind == KIND_SCALAR:
        return ModelSpec(
            dim=dim,
            kind=kind,
            base_branch=tuple(
                np.array(m, dtype=float) for m in data["base_branch"]
            ),
            scalar_law=tuple((a["prob"], a["value"]) for a in data["scalar_law"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_model(spec: ModelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(spec), fh, indent=2)
        fh.write("\n")


_MODEL_DIR = Path(__file__).resolve().parent / "models"
EXAMPLE_NAMES = ("ex1", "ex2", "ex3")


def example_path(name: str) -> Path:
    if name not in EXAMPLE_NAMES:
        raise ValueError(f"unknown bundled model {name!r}; have {EXAMPLE_NAMES}")
    return _MODEL_DIR / f"{name}.json"


def example_model(name: str) -> ModelSpec:
    return load_model(example_path(name))
