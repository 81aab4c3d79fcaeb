"""Domain types for weighted sparsity minimization.

The general problem handled everywhere in the package is::

    minimize    sum_k  alpha_k * 1[x_k != 0] + beta_k * ||x_k||_0
    subject to  A x = b,   ||x||_inf <= M   (box form only)

where ``x`` is split into contiguous blocks ``x_1, ..., x_K``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

CONSERVATIVE = "conservative"

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-10


class BidualError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInstance(BidualError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DimensionMismatch(BidualError, ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous partition of ``n`` entries into blocks of the given sizes."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ValueError("partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def singletons(cls, n: int) -> "BlockPartition":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def K(self) -> int:
        return len(self.sizes)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    @property
    def block_of(self) -> np.ndarray:
        """Block index of every entry."""
        return np.repeat(np.arange(self.K), self.sizes)

    def block_slice(self, k: int) -> slice:
        off = self.offsets
        return slice(int(off[k]), int(off[k + 1]))

    def indicator(self) -> np.ndarray:
        """The n x K 0/1 membership matrix (one 1 per row)."""
        P = np.zeros((self.n, self.K))
        P[np.arange(self.n), self.block_of] = 1.0
        return P

    def expand(self, per_block) -> np.ndarray:
        """Repeat a per-block vector so it has one entry per coordinate."""
        return np.repeat(np.asarray(per_block, dtype=float), self.sizes)


@dataclass(frozen=True)
class SparsityMode:
    """Weight preset: entry-wise, group, or mixed(gamma).

    In mixed mode the last block is the error block ``e`` and the
    corresponding columns of ``A`` must be the identity.
    """

    name: str
    gamma: float = 0.0

    ENTRY = "entry"
    GROUP = "group"
    MIXED = "mixed"

    def __post_init__(self):
        if self.name not in (self.ENTRY, self.GROUP, self.MIXED):
            raise ValueError(f"unknown sparsity mode {self.name!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @classmethod
    def entry(cls):
        return cls(cls.ENTRY)

    @classmethod
    def group(cls):
        return cls(cls.GROUP)

    @classmethod
    def mixed(cls, gamma: float = 0.01):
        return cls(cls.MIXED, float(gamma))

    def weights(self, K: int):
        """Return (alpha, beta) for a partition with K blocks."""
        if self.name == self.ENTRY:
            return np.zeros(K), np.ones(K)
        if self.name == self.GROUP:
            return np.ones(K), np.zeros(K)
        alpha = np.ones(K)
        beta = np.zeros(K)
        alpha[-1] = 0.0
        beta[-1] = self.gamma
        return alpha, beta

    def __str__(self):
        if self.name == self.MIXED:
            return f"mixed(gamma={self.gamma:g})"
        return self.name


BoxBound = Union[float, str]


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    A: np.ndarray
    b: np.ndarray
    partition: BlockPartition
    alpha: np.ndarray
    beta: np.ndarray
    M: BoxBound = CONSERVATIVE
    mode: Optional[SparsityMode] = None

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(np.atleast_2d(self.A)))
        object.__setattr__(self, "b", _frozen(np.ravel(self.b)))
        object.__setattr__(self, "alpha", _frozen(np.ravel(self.alpha)))
        object.__setattr__(self, "beta", _frozen(np.ravel(self.beta)))
        if isinstance(self.M, str):
            if self.M != CONSERVATIVE:
                raise ValueError(f"M must be a number or {CONSERVATIVE!r}")
        else:
            object.__setattr__(self, "M", float(self.M))

    @classmethod
    def from_mode(cls, A, b, mode: SparsityMode, partition=None, M: BoxBound = CONSERVATIVE):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if partition is None:
            partition = BlockPartition.singletons(A.shape[1])
        elif not isinstance(partition, BlockPartition):
            partition = BlockPartition(tuple(partition))
        alpha, beta = mode.weights(partition.K)
        return cls(A, b, partition, alpha, beta, M, mode)

    @classmethod
    def mixed(cls, A_x, b, x_blocks: Sequence[int], gamma: float = 0.01, M: BoxBound = CONSERVATIVE):
        """Build ``[A_x | I] [x; e] = b`` with the error block appended last."""
        A_x = np.atleast_2d(np.asarray(A_x, dtype=float))
        m = A_x.shape[0]
        A = np.hstack([A_x, np.eye(m)])
        part = BlockPartition(tuple(x_blocks) + (m,))
        return cls.from_mode(A, b, SparsityMode.mixed(gamma), part, M)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def K(self) -> int:
        return self.partition.K

    @property
    def conservative(self) -> bool:
        return isinstance(self.M, str)

    @property
    def beta_entries(self) -> np.ndarray:
        return self.partition.expand(self.beta)

    def with_M(self, M: BoxBound) -> "ProblemInstance":
        return ProblemInstance(self.A, self.b, self.partition, self.alpha, self.beta, M, self.mode)

    def with_weights(self, alpha, beta) -> "ProblemInstance":
        return ProblemInstance(self.A, self.b, self.partition, alpha, beta, self.M, None)

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.partition == other.partition
            and self.M == other.M
            and self.mode == other.mode
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("A", "b", "alpha", "beta")
            )
        )

    __hash__ = None


@dataclass(frozen=True)
class RelaxationSolution:
    status: Status
    x: Optional[np.ndarray]
    objective: float
    block_inf_norms: Optional[np.ndarray] = None
    block_l1_norms: Optional[np.ndarray] = None
    iterations: int = 0


@dataclass(frozen=True)
class DualSolution:
    status: Status
    lambda3: Optional[np.ndarray]
    lambda4: Optional[np.ndarray]
    lambda5: Optional[np.ndarray]
    lambda6: Optional[np.ndarray]
    lambda7: Optional[np.ndarray]
    objective: float


@dataclass(frozen=True)
class OracleResult:
    value: float
    support: frozenset
    witness_x: Optional[np.ndarray]
    exhaustive: bool
    subsets_tested: int = 0


@dataclass(frozen=True)
class SparsityCertificate:
    bound: float
    kind: Optional[SparsityMode]
    M_used: float
    relaxation_objective: float
    integer_bound: Optional[int] = None
    x_relaxed: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def claim(self) -> str:
        what = "weighted sparsity" if self.kind is None else f"{self.kind} sparsity"
        return (
            f"optimal {what} >= {self.bound:.12g}, "
            f"valid whenever M_used = {self.M_used:.12g} >= ||x*_primal||_inf"
        )


def validate(instance: ProblemInstance) -> list:
    """List every violated invariant of ``instance``; empty when valid."""
    out = []
    A, b = instance.A, instance.b
    if A.ndim != 2:
        out.append("A must be a 2-d matrix")
        return out
    m, n = A.shape
    if b.shape[0] != m:
        out.append("dimension mismatch b vs A")
    if instance.partition.n != n:
        out.append("dimension mismatch partition vs A")
    K = instance.partition.K
    if instance.alpha.shape[0] != K:
        out.append("dimension mismatch alpha vs partition")
    if instance.beta.shape[0] != K:
        out.append("dimension mismatch beta vs partition")
    for name in ("A", "b", "alpha", "beta"):
        if not np.all(np.isfinite(getattr(instance, name))):
            out.append(f"{name} must be finite")
    if np.any(instance.alpha < 0):
        out.append("alpha must be nonnegative")
    if np.any(instance.beta < 0):
        out.append("beta must be nonnegative")
    if not instance.conservative and not (np.isfinite(instance.M) and instance.M > 0):
        out.append("M must be positive")
    mode = instance.mode
    if mode is not None and mode.name == SparsityMode.MIXED and not out:
        d_last = instance.partition.sizes[-1]
        if d_last != m:
            out.append("mixed mode needs an error block of size m")
        elif not np.array_equal(A[:, n - m:], np.eye(m)):
            out.append("mixed mode needs identity columns for the error block")
    return out


def check(instance: ProblemInstance) -> None:
    problems = validate(instance)
    if problems:
        raise InvalidInstance(problems)


def default_zero_tol(x) -> float:
    x = np.asarray(x, dtype=float)
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return 1e-6 * max(1.0, scale)


def support_of(x, zero_tol: Optional[float] = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if zero_tol is None:
        zero_tol = default_zero_tol(x)
    return np.abs(x) > zero_tol


def objective_of_support(instance: ProblemInstance, active) -> float:
    """Weighted objective of a boolean support mask."""
    active = np.asarray(active, dtype=bool)
    counts = np.add.reduceat(active.astype(float), instance.partition.offsets[:-1])
    return float(instance.alpha @ (counts > 0) + instance.beta @ counts)


def primal_objective(instance: ProblemInstance, x, zero_tol: Optional[float] = None) -> float:
    x = np.ravel(np.asarray(x, dtype=float))
    if x.shape[0] != instance.n:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {instance.n}")
    return objective_of_support(instance, support_of(x, zero_tol))


def block_norms(partition: BlockPartition, x):
    """Per-block (inf-norm, l1-norm) of ``x``."""
    ax = np.abs(np.asarray(x, dtype=float))
    starts = partition.offsets[:-1]
    return np.maximum.reduceat(ax, starts), np.add.reduceat(ax, starts)
