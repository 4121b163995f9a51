"""Snapshot windows, sample covariance, and Hermitian eigendecomposition.

Snapshots are length-n vectors tagged real (beta=1) or complex (beta=2);
a SnapshotWindow keeps the most recent N of them in arrival order.  The
covariance is recomputed from the stored snapshots on every query, which
sidesteps the drift that rank-one downdating accumulates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EigenConvergenceError",
    "Snapshot",
    "SnapshotWindow",
    "EigenSystem",
    "push_snapshot",
    "sample_covariance",
    "hermitian_eig",
    "read_snapshot_csv",
]

_HERMITIAN_RTOL = 1e-10


class EigenConvergenceError(RuntimeError):
    """Eigensolver failed to converge within its iteration cap."""


@dataclass(frozen=True)
class Snapshot:
    """One observation vector at an integer time index."""

    time_index: int
    values: np.ndarray
    beta: int

    def __post_init__(self) -> None:
        vals = np.asarray(
            self.values, dtype=complex if self.beta == 2 else float
        ).reshape(-1)
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        if vals.size < 1:
            raise ValueError("snapshot must have at least one entry")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite entry in snapshot at t={self.time_index}")
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return self.values.size


@dataclass
class SnapshotWindow:
    """Ring of the most recent <= capacity snapshots, oldest evicted first."""

    capacity: int
    dimension: int
    beta: int
    _ring: deque = field(default_factory=deque, repr=False)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        self._ring = deque(self._ring, maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._ring)

    def snapshots(self) -> tuple[Snapshot, ...]:
        return tuple(self._ring)


def push_snapshot(window: SnapshotWindow, snapshot: Snapshot) -> SnapshotWindow:
    """Store the newest snapshot, evicting the oldest when at capacity."""
    if snapshot.dimension != window.dimension:
        raise ValueError(
            f"snapshot dimension {snapshot.dimension} does not match "
            f"window dimension {window.dimension}"
        )
    if snapshot.beta != window.beta:
        raise ValueError(
            f"snapshot field flag {snapshot.beta} does not match window {window.beta}"
        )
    window._ring.append(snapshot)
    return window


def sample_covariance(window: SnapshotWindow) -> np.ndarray:
    """(1/N) sum of x x* over the stored snapshots, exactly Hermitian."""
    count = len(window)
    if count == 0:
        raise ValueError("cannot form covariance of an empty window")
    rows = np.stack([snap.values for snap in window.snapshots()])
    cov = rows.T @ rows.conj() / count
    # symmetrize so C == C* holds entrywise, not just to roundoff
    cov = 0.5 * (cov + cov.conj().T)
    if window.beta == 1:
        cov = cov.real
    return cov


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(matrix: np.ndarray) -> EigenSystem:
    """Full eigensystem of a Hermitian matrix, eigenvalues descending.

    Input must be Hermitian to relative tolerance 1e-10; real symmetric
    input yields real eigenvectors.
    """
    mat = np.asarray(matrix)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    scale = max(1.0, float(np.linalg.norm(mat)))
    if np.linalg.norm(mat - mat.conj().T) > _HERMITIAN_RTOL * scale:
        raise ValueError("input matrix is not Hermitian")
    try:
        eigvals, eigvecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigvals)[::-1]
    return EigenSystem(
        eigenvalues=eigvals[order], eigenvectors=np.ascontiguousarray(eigvecs[:, order])
    )


def read_snapshot_csv(path) -> list[Snapshot]:
    """Parse snapshot rows from CSV.

    Header is `t,re_0,im_0,...` for complex data or `t,x_0,...` for real
    data; rows must carry strictly increasing integer time indices.
    """
    import csv

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty snapshot file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise ValueError(f"{path}: first column must be 't'")
        cols = header[1:]
        if cols and all(
            c.startswith(("re_", "im_")) for c in cols
        ):
            if len(cols) % 2 != 0:
                raise ValueError(f"{path}: unpaired re_/im_ columns")
            beta = 2
            dim = len(cols) // 2
            expected = [f"re_{i}" for i in range(dim)]
            expected = [c for pair in zip(expected, (f"im_{i}" for i in range(dim))) for c in pair]
        elif cols and all(c.startswith("x_") for c in cols):
            beta = 1
            dim = len(cols)
            expected = [f"x_{i}" for i in range(dim)]
        else:
            raise ValueError(f"{path}: columns must be re_i/im_i pairs or x_i")
        if cols != expected:
            raise ValueError(f"{path}: columns out of order, expected {expected}")

        snapshots: list[Snapshot] = []
        last_t = None
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(cols) + 1:
                raise ValueError(f"{path}:{line_no}: expected {len(cols) + 1} fields")
            try:
                t = int(row[0])
                nums = [float(cell) for cell in row[1:]]
            except ValueError:
                raise ValueError(
                    f"{path}:{line_no}: malformed numeric field"
                ) from None
            if last_t is not None and t <= last_t:
                raise ValueError(f"{path}:{line_no}: time index not increasing")
            last_t = t
            if beta == 2:
                vals = np.array(
                    [complex(nums[2 * i], nums[2 * i + 1]) for i in range(dim)]
                )
            else:
                vals = np.array(nums)
            snapshots.append(Snapshot(time_index=t, values=vals, beta=beta))
    if not snapshots:
        raise ValueError(f"{path}: no snapshot rows")
    return snapshots
