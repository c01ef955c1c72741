"""Permutations, rankings and doubly-stochastic matrix checks.

Positions are 1-based in every formula-facing contract (position biases,
DCG discounts); storage is 0-based throughout. All values here are
immutable and all operations are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-9


def _as_index_tuple(values: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class Ranking:
    """A full ranking: ``items[p]`` is the item shown at 0-based position p."""

    items: tuple[int, ...]

    def __init__(self, items: Sequence[int]):
        object.__setattr__(self, "items", _as_index_tuple(items))
        n = len(self.items)
        if sorted(self.items) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {self.items}")

    def __len__(self) -> int:
        return len(self.items)

    def position_of(self, item: int) -> int:
        """1-based displayed position of ``item``."""
        return self.items.index(item) + 1

    def to_array(self) -> np.ndarray:
        return np.asarray(self.items, dtype=np.int64)

    @classmethod
    def identity(cls, n: int) -> "Ranking":
        return cls(range(n))


@dataclass(frozen=True)
class Permutation:
    """Position permutation: source position s moves to ``dest[s]`` (0-based)."""

    dest: tuple[int, ...]

    def __init__(self, dest: Sequence[int]):
        object.__setattr__(self, "dest", _as_index_tuple(dest))
        n = len(self.dest)
        if sorted(self.dest) != list(range(n)):
            raise ValueError(f"not a bijection on 0..{n - 1}: {self.dest}")

    def __len__(self) -> int:
        return len(self.dest)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.dest, dtype=np.int64)

    def to_matrix(self) -> np.ndarray:
        """Dense n-by-n permutation matrix (rows: source, cols: destination)."""
        n = len(self.dest)
        m = np.zeros((n, n))
        m[np.arange(n), self.dest] = 1.0
        return m

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.dest)
        for s, d in enumerate(self.dest):
            inv[d] = s
        return Permutation(inv)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))


def apply_permutation(ranking: Ranking, perm: Permutation) -> Ranking:
    """Move the item at source position s to position ``perm.dest[s]``."""
    if len(ranking) != len(perm):
        raise ValueError(f"length mismatch: ranking {len(ranking)}, permutation {len(perm)}")
    out = [0] * len(ranking)
    for s, d in enumerate(perm.dest):
        out[d] = ranking.items[s]
    return Ranking(out)


def compose(first: Permutation, second: Permutation) -> Permutation:
    """Permutation equivalent to applying ``first`` then ``second``."""
    if len(first) != len(second):
        raise ValueError(f"length mismatch: {len(first)} vs {len(second)}")
    return Permutation(tuple(second.dest[d] for d in first.dest))


@dataclass(frozen=True)
class StochasticityReport:
    """Outcome of a doubly-stochastic check with the first violation, if any."""

    ok: bool
    reason: str = ""
    bad_row: int | None = None
    bad_col: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_doubly_stochastic(matrix: np.ndarray, tol: float = DEFAULT_TOL) -> StochasticityReport:
    """Check entries in [0,1] and row/column sums equal to 1 within ``tol``."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    bad = np.argwhere((m < -tol) | (m > 1 + tol))
    if bad.size:
        r, c = map(int, bad[0])
        return StochasticityReport(False, f"entry ({r},{c})={m[r, c]:.3g} outside [0,1]", r, c)
    row_err = np.abs(m.sum(axis=1) - 1.0)
    if row_err.max() > tol:
        r = int(row_err.argmax())
        return StochasticityReport(False, f"row {r} sums to {m[r].sum():.12g}", bad_row=r)
    col_err = np.abs(m.sum(axis=0) - 1.0)
    if col_err.max() > tol:
        c = int(col_err.argmax())
        return StochasticityReport(False, f"column {c} sums to {m[:, c].sum():.12g}", bad_col=c)
    return StochasticityReport(True)


@dataclass(frozen=True)
class DoublyStochasticMatrix:
    """Validated n-by-n doubly stochastic matrix.

    ``entries[r, k]`` is the probability that whatever the row indexes
    (a ranker slot for the randomizer's matrix, an item for corrected
    matrices) is displayed at 0-based position k.
    """

    entries: np.ndarray = field(repr=False)
    tol: float = DEFAULT_TOL

    def __init__(self, entries: np.ndarray, tol: float = DEFAULT_TOL):
        m = np.array(entries, dtype=float)
        report = check_doubly_stochastic(m, tol)
        if not report:
            raise ValueError(f"not doubly stochastic: {report.reason}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "tol", tol)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx) -> float:
        return self.entries[idx]

    def to_json_dict(self, kind: str = "propensity") -> dict:
        return {"kind": kind, "n": self.n, "entries": self.entries.tolist()}

    @classmethod
    def from_json_dict(cls, data: dict, tol: float = DEFAULT_TOL) -> "DoublyStochasticMatrix":
        return cls(np.asarray(data["entries"], dtype=float), tol=tol)
