"""Circuit unitaries: Haar sampler, hardware-efficient ansatz, explicit matrices."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import UnitaryOp


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    ``stream_id`` may be a single integer or a tuple of integers (nested
    spawn keys), e.g. ``(grid_point, sample)``.
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0

    def generator(self) -> np.random.Generator:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))

    def child(self, i: int) -> RngStream:
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return RngStream(self.seed, key + (i,))


def split_streams(master_seed: int, count: int) -> list[RngStream]:
    return [RngStream(master_seed, i) for i in range(count)]


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def haar_unitary(dim: int, rng, phase_fix: bool = True) -> UnitaryOp:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The diagonal phases of R are divided out of Q; ``phase_fix=False`` skips
    that step and exists only to show the resulting bias.
    """
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    return UnitaryOp(haar_batch(dim, 1, rng, phase_fix)[0])


def haar_batch(dim: int, count: int, rng, phase_fix: bool = True) -> np.ndarray:
    """``count`` independent Haar unitaries stacked along axis 0."""
    g = _as_generator(rng)
    a = (g.standard_normal((count, dim, dim)) + 1j * g.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(a)
    if not phase_fix:
        return q
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def rot_zyz(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Rz(alpha) Ry(beta) Rz(gamma)."""
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    return rz(alpha) @ ry @ rz(gamma)


def cnot_chain(n: int) -> np.ndarray:
    """CNOT(1->2) first, then CNOT(2->3), ..., CNOT(n-1 -> n)."""
    dim = 2**n
    out = np.eye(dim, dtype=complex)
    idx = np.arange(dim)
    for i in range(n - 1):
        ctrl = 1 << (n - 1 - i)
        tgt = 1 << (n - 2 - i)
        perm = np.where(idx & ctrl, idx ^ tgt, idx)
        out = out[perm]
    return out


def hardware_efficient(n: int, layers: int, rng=None, angles: np.ndarray | None = None) -> UnitaryOp:
    """``layers`` blocks of per-qubit Rz Ry Rz rotations followed by a CNOT chain.

    Angles are drawn uniformly from [0, 2pi) unless given explicitly with
    shape ``(layers, n, 3)``.
    """
    if n < 2:
        raise ValueError(f"hardware-efficient ansatz needs n >= 2, got {n}")
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")
    if angles is None:
        angles = _as_generator(rng).uniform(0.0, 2 * np.pi, size=(layers, n, 3))
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (layers, n, 3):
        raise ValueError(f"angles must have shape {(layers, n, 3)}, got {angles.shape}")
    chain = cnot_chain(n)
    u = np.eye(2**n, dtype=complex)
    for block in angles:
        rots = rot_zyz(*block[0])
        for q in block[1:]:
            rots = np.kron(rots, rot_zyz(*q))
        u = chain @ rots @ u
    return UnitaryOp(u)


def product_haar(n: int, rng) -> UnitaryOp:
    """Tensor product of independent single-qubit Haar unitaries."""
    singles = haar_batch(2, n, rng)
    u = singles[0]
    for s in singles[1:]:
        u = np.kron(u, s)
    return UnitaryOp(u)


@dataclass(frozen=True)
class CircuitSpec:
    """How one subcircuit unitary is produced.

    kind is one of ``"haar"`` (needs ``n_qubits``), ``"hardware_efficient"``
    (``n_qubits``, ``layers``, optional ``angles``), ``"product"`` (product
    of single-qubit Haar unitaries) or ``"explicit"`` (``matrix``).
    """

    kind: str
    n_qubits: int | None = None
    layers: int = 1
    seed: int = 0
    stream_id: int | tuple[int, ...] = 0
    angles: np.ndarray | None = field(default=None, compare=False)
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("haar", "hardware_efficient", "product", "explicit"):
            raise ValueError(f"unknown circuit kind {self.kind!r}")
        if self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit circuit needs a matrix")
        elif self.n_qubits is None or self.n_qubits < 1:
            raise ValueError(f"{self.kind} circuit needs a positive n_qubits")
        if self.kind == "hardware_efficient" and self.layers < 1:
            raise ValueError(f"hardware-efficient layers must be >= 1, got {self.layers}")

    @property
    def dim(self) -> int:
        if self.kind == "explicit":
            return np.asarray(self.matrix).shape[0]
        return 2**self.n_qubits

    def build(self) -> UnitaryOp:
        rng = RngStream(self.seed, self.stream_id)
        if self.kind == "haar":
            return haar_unitary(self.dim, rng)
        if self.kind == "hardware_efficient":
            return hardware_efficient(self.n_qubits, self.layers, rng, self.angles)
        if self.kind == "product":
            return product_haar(self.n_qubits, rng)
        return UnitaryOp(self.matrix)


def as_matrix(circuit) -> np.ndarray:
    """Dense matrix for a CircuitSpec, UnitaryOp or raw array."""
    if isinstance(circuit, CircuitSpec):
        return circuit.build().data
    if isinstance(circuit, UnitaryOp):
        return circuit.data
    return np.asarray(circuit, dtype=complex)
