"""Dense complex linear algebra shared by the simulator.

Basis convention: each site is ordered (|0>, |1>, |vac>) and multi-site
operators use row-major Kronecker order with qubit 1 as the leftmost factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

HERM_TOL = 1e-12
PSD_TOL = 1e-10
UNITARY_TOL = 1e-10
MAX_DIM = 3**8


class InvariantError(ValueError):
    """Raised when an object violates a documented numerical invariant."""


@dataclass(frozen=True)
class HilbertSpace:
    n_qubits: int
    local_dim: int = 2

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.local_dim not in (2, 3):
            raise ValueError(f"local_dim must be 2 or 3, got {self.local_dim}")
        if self.total_dim > MAX_DIM:
            raise ValueError(f"dimension {self.total_dim} exceeds the resource limit {MAX_DIM}")

    @property
    def total_dim(self) -> int:
        return self.local_dim**self.n_qubits

    @property
    def is_lossy(self) -> bool:
        return self.local_dim == 3


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian PSD operator on a :class:`HilbertSpace`.

    ``trace_hint`` is the trace recorded at construction; it may be below 1
    for unnormalized lossy states.
    """

    space: HilbertSpace
    data: np.ndarray = field(repr=False)
    trace_hint: float = field(default=float("nan"))

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        dim = self.space.total_dim
        if data.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {data.shape}")
        herm_err = np.max(np.abs(data - data.conj().T)) if dim else 0.0
        if herm_err > HERM_TOL:
            raise InvariantError(f"operator is not Hermitian (max deviation {herm_err:.3e})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "trace_hint", float(np.trace(data).real))

    @classmethod
    def from_ket(cls, space: HilbertSpace, ket: np.ndarray) -> DensityOp:
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        return cls(space, np.outer(ket, ket.conj()))

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.data, self.data).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])

    def check_psd(self, tol: float = PSD_TOL) -> None:
        lam = self.min_eigenvalue()
        if lam < -tol:
            raise InvariantError(f"operator is not PSD (min eigenvalue {lam:.3e})")

    def normalized(self) -> DensityOp:
        tr = self.trace()
        if tr <= 0:
            raise InvariantError("cannot normalize an operator with non-positive trace")
        return DensityOp(self.space, self.data / tr)

    def with_data(self, data: np.ndarray) -> DensityOp:
        return DensityOp(self.space, data)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"unitary must be square, got shape {data.shape}")
        err = np.max(np.abs(data.conj().T @ data - np.eye(data.shape[0])))
        if err > UNITARY_TOL:
            raise InvariantError(f"matrix is not unitary (max deviation {err:.3e})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def H(self) -> np.ndarray:
        return self.data.conj().T


def _as_array(m) -> np.ndarray:
    if isinstance(m, (DensityOp, UnitaryOp)):
        return m.data
    return np.asarray(m)


def tensor(*mats) -> np.ndarray:
    """Kronecker product of the arguments, leftmost factor first."""
    if not mats:
        raise ValueError("tensor needs at least one factor")
    out = _as_array(mats[0])
    for m in mats[1:]:
        out = np.kron(out, _as_array(m))
    return out


def hermitian_eig(m) -> tuple[np.ndarray, UnitaryOp]:
    """Eigendecomposition with eigenvalues sorted in descending order."""
    data = _as_array(m)
    herm_err = np.max(np.abs(data - data.conj().T))
    if herm_err > HERM_TOL:
        raise InvariantError(f"operator is not Hermitian (max deviation {herm_err:.3e})")
    lam, vecs = np.linalg.eigh(data)
    return lam[::-1].copy(), UnitaryOp(vecs[:, ::-1])


def _clamped_eig(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, vecs = np.linalg.eigh(data)
    if lam[0] < -PSD_TOL:
        raise InvariantError(f"operator is not PSD (min eigenvalue {lam[0]:.3e})")
    return np.clip(lam, 0.0, None), vecs


def power_array(data: np.ndarray, M: int, method: str = "eig") -> np.ndarray:
    """Raw-array version of :func:`matrix_power`."""
    if M < 1:
        raise ValueError(f"distillation order must be >= 1, got {M}")
    if M == 1:
        return data
    if method == "eig":
        lam, vecs = _clamped_eig(data)
        out = (vecs * lam**M) @ vecs.conj().T
        return 0.5 * (out + out.conj().T)
    if method == "multiply":
        return np.linalg.matrix_power(data, M)
    raise ValueError(f"unknown method {method!r}")


def matrix_power(m: DensityOp, M: int, method: str = "eig") -> DensityOp:
    """``m**M`` via clamped eigendecomposition or repeated squaring.

    Eigenvalues in [-1e-10, 0) are treated as zero before powering.
    """
    if M == 1:
        return m
    return DensityOp(m.space, power_array(m.data, M, method))


def partial_trace_array(data: np.ndarray, n: int, local_dim: int, j: int) -> np.ndarray:
    """Trace out site ``j`` (1-based) of an ``n``-site operator."""
    if not 1 <= j <= n:
        raise IndexError(f"qubit index {j} out of range 1..{n}")
    t = data.reshape((local_dim,) * (2 * n))
    out = np.trace(t, axis1=j - 1, axis2=n + j - 1)
    rest = local_dim ** (n - 1)
    return out.reshape(rest, rest)


def partial_trace(rho: DensityOp, j: int) -> DensityOp:
    n, ld = rho.space.n_qubits, rho.space.local_dim
    if not 1 <= j <= n:
        raise IndexError(f"qubit index {j} out of range 1..{n}")
    if n == 1:
        raise ValueError("cannot trace out the only qubit; use DensityOp.trace()")
    return DensityOp(HilbertSpace(n - 1, ld), partial_trace_array(rho.data, n, ld, j))


@lru_cache(maxsize=None)
def qubit_sector_indices(n: int) -> np.ndarray:
    """Positions of the 2**n vacuum-free basis kets inside the 3**n space.

    Ordered to match the 2**n qubit basis, so ``embedded[np.ix_(idx, idx)]``
    is the qubit-sector block.
    """
    idx = np.array([int("".join(map(str, bits)), 3) for bits in product((0, 1), repeat=n)])
    idx.setflags(write=False)
    return idx


def _require_lossy(space: HilbertSpace) -> None:
    if space.local_dim != 3:
        raise ValueError("operation requires a vacuum-extended (local_dim=3) space")


def qubit_sector_projector(space: HilbertSpace) -> np.ndarray:
    _require_lossy(space)
    P = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    idx = qubit_sector_indices(space.n_qubits)
    P[idx, idx] = 1.0
    return P


def embed_array(op: np.ndarray, n: int) -> np.ndarray:
    idx = qubit_sector_indices(n)
    out = np.zeros((3**n, 3**n), dtype=complex)
    out[np.ix_(idx, idx)] = op
    return out


def embed_qubit_op(op, space: HilbertSpace) -> np.ndarray:
    """Place a 2**n operator on the qubit sector of the 3**n space (zero elsewhere)."""
    _require_lossy(space)
    op = _as_array(op)
    d = 2**space.n_qubits
    if op.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} operator, got shape {op.shape}")
    return embed_array(op, space.n_qubits)


def embed_state(rho: DensityOp) -> DensityOp:
    """Qubit-space state viewed as a state of the vacuum-extended space."""
    if rho.space.local_dim == 3:
        return rho
    n = rho.space.n_qubits
    return DensityOp(HilbertSpace(n, 3), embed_array(rho.data, n))


def ket_zero(n: int) -> np.ndarray:
    ket = np.zeros(2**n, dtype=complex)
    ket[0] = 1.0
    return ket
