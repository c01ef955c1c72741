"""Birkhoff-von-Neumann decomposition of doubly stochastic matrices.

A doubly stochastic matrix is written as a convex combination of
permutation matrices by repeatedly extracting a perfect matching on the
positive-entry support and subtracting the minimum matched entry. The
matching chosen at each step is the lexicographically first one by
(row, column), so decompositions are reproducible across runs and
platforms. The greedy construction yields at most (n-1)^2 + 1 components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rankings import DEFAULT_TOL, DoublyStochasticMatrix, Permutation, check_doubly_stochastic


class MatchingError(RuntimeError):
    """No perfect matching exists on the support graph (invalid input)."""


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _lex_perfect_matching(support: np.ndarray) -> list[int]:
    """Lexicographically first perfect matching by (row, column) scan order.

    Starting from any perfect matching, rows are fixed in order to their
    smallest feasible column; feasibility of a candidate column is one
    augmenting-path search for the row it displaces, rolled back on
    failure. Column sets are bitmasks, so this stays fast for the matrix
    sizes propensity work actually uses.
    """
    n = support.shape[0]
    adj = [int(sum(1 << c for c in np.flatnonzero(support[r]))) for r in range(n)]
    match_row = [-1] * n  # row -> col
    match_col = [-1] * n  # col -> row

    def augment(row: int, allowed: int, visited: int) -> tuple[bool, int]:
        for col in _iter_bits(adj[row] & allowed & ~visited):
            visited |= 1 << col
            owner = match_col[col]
            if owner == -1:
                ok = True
            else:
                ok, visited = augment(owner, allowed, visited)
            if ok:
                match_row[row] = col
                match_col[col] = row
                return True, visited
        return False, visited

    free = (1 << n) - 1
    for row in range(n):
        ok, _ = augment(row, free, 0)
        if not ok:
            raise MatchingError("support graph admits no perfect matching")

    assigned: list[int] = []
    avail = free
    for row in range(n):
        chosen = -1
        for col in _iter_bits(adj[row] & avail):
            if match_row[row] == col:
                chosen = col
                break
            # force row->col; the displaced row must re-match among the
            # still-available columns (minus col), else roll back
            displaced = match_col[col]
            old = match_row[row]
            match_row[row], match_col[col] = col, row
            match_col[old] = -1
            match_row[displaced] = -1
            ok, _ = augment(displaced, avail & ~(1 << col), 0)
            if ok:
                chosen = col
                break
            match_row[displaced], match_col[col] = col, displaced
            match_row[row], match_col[old] = old, row
        if chosen == -1:  # pragma: no cover - perfect matching invariant
            raise MatchingError(f"row {row} cannot be matched")
        assigned.append(chosen)
        avail &= ~(1 << chosen)
    return assigned


@dataclass(frozen=True)
class BvnDecomposition:
    """Convex combination of permutations reconstructing a source matrix."""

    components: tuple[tuple[Permutation, float], ...]

    @property
    def n(self) -> int:
        return len(self.components[0][0]) if self.components else 0

    def __len__(self) -> int:
        return len(self.components)

    @property
    def probabilities(self) -> np.ndarray:
        return np.asarray([p for _, p in self.components])

    def permutation_array(self) -> np.ndarray:
        """All permutations stacked as an (M, n) destination-index array."""
        return np.asarray([perm.dest for perm, _ in self.components], dtype=np.int64)

    def reconstruct(self) -> np.ndarray:
        """Sum of probability-weighted permutation matrices."""
        out = np.zeros((self.n, self.n))
        rows = np.arange(self.n)
        for perm, p in self.components:
            out[rows, perm.to_array()] += p
        return out

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "components": [{"perm": list(perm.dest), "p": p} for perm, p in self.components],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BvnDecomposition":
        return cls(
            tuple(
                (Permutation(comp["perm"]), float(comp["p"]))
                for comp in data["components"]
            )
        )


def decompose(matrix: DoublyStochasticMatrix | np.ndarray, tol: float = DEFAULT_TOL) -> BvnDecomposition:
    """Decompose a doubly stochastic matrix into (permutation, probability) pairs.

    Components with probability below ``tol`` are never emitted; the final
    probabilities are renormalized so they sum to 1 exactly up to float
    rounding. Raises ``ValueError`` for non-stochastic input and
    ``MatchingError`` when the support graph has no perfect matching
    (which signals numerically invalid input).
    """
    if isinstance(matrix, DoublyStochasticMatrix):
        residual = np.array(matrix.entries)
    else:
        report = check_doubly_stochastic(np.asarray(matrix, dtype=float), tol)
        if not report:
            raise ValueError(f"not doubly stochastic: {report.reason}")
        residual = np.array(matrix, dtype=float)

    n = residual.shape[0]
    rows = np.arange(n)
    components: list[tuple[Permutation, float]] = []
    while residual.max() > tol:
        dest = _lex_perfect_matching(residual > tol)
        q = float(residual[rows, dest].min())
        components.append((Permutation(dest), q))
        residual[rows, dest] -= q
        residual[residual <= tol] = 0.0

    if not components:
        raise ValueError("matrix has no mass above tolerance")
    total = sum(p for _, p in components)
    return BvnDecomposition(tuple((perm, p / total) for perm, p in components))


def sample(decomposition: BvnDecomposition, rng: np.random.Generator) -> tuple[Permutation, int]:
    """Draw one component; returns (permutation, component index)."""
    if len(decomposition) == 0:
        raise ValueError("empty decomposition")
    index = sample_component_indices(decomposition.probabilities, rng.random(1))[0]
    return decomposition.components[index][0], int(index)


def sample_component_indices(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Map uniform draws to component indices via the probability cumsum.

    Shared by the scalar and batch sampling paths so both consume the
    same uniforms identically.
    """
    cum = np.cumsum(probabilities)
    idx = np.searchsorted(cum, uniforms, side="right")
    return np.minimum(idx, len(probabilities) - 1)


def stay_probability_matrix(n: int, stay: float) -> DoublyStochasticMatrix:
    """Matrix keeping each slot in place with probability ``stay`` and
    moving it to any other position uniformly otherwise."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 < stay <= 1.0:
        raise ValueError(f"stay probability must be in (0, 1], got {stay}")
    entries = np.full((n, n), (1.0 - stay) / (n - 1))
    np.fill_diagonal(entries, stay)
    return DoublyStochasticMatrix(entries)
