"""Exact i.i.d. loss and Pauli channels, and delay-time to error-rate conversion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DensityOp

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class LossNoise:
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"loss rate must lie in [0, 1], got {self.eps}")

    @property
    def kind(self) -> str:
        return "loss"

    @property
    def total(self) -> float:
        return self.eps

    def scaled(self, factor: float) -> LossNoise:
        return LossNoise(self.eps * factor)


@dataclass(frozen=True)
class PauliNoise:
    eps1: float
    eps2: float
    eps3: float

    def __post_init__(self):
        _check_pauli_rates(self.eps1, self.eps2, self.eps3)

    @classmethod
    def depolarizing(cls, eps: float) -> PauliNoise:
        return cls(eps / 3, eps / 3, eps / 3)

    @property
    def kind(self) -> str:
        return "pauli"

    @property
    def rates(self) -> tuple[float, float, float]:
        return (self.eps1, self.eps2, self.eps3)

    @property
    def total(self) -> float:
        return self.eps1 + self.eps2 + self.eps3

    def scaled(self, factor: float) -> PauliNoise:
        return PauliNoise(self.eps1 * factor, self.eps2 * factor, self.eps3 * factor)


NoiseSpec = LossNoise | PauliNoise


@dataclass(frozen=True)
class DecayModel:
    """Delay-line decay.

    ``kind="loss"`` takes ``gamma`` in dB per time unit; ``kind="depol"``
    takes an exponential rate per time unit. ``tau_unit`` is only a label.
    """

    kind: str
    gamma: float
    tau_unit: str = "ns"

    def __post_init__(self):
        if self.kind not in ("loss", "depol"):
            raise ValueError(f"decay kind must be 'loss' or 'depol', got {self.kind!r}")
        if self.gamma < 0:
            raise ValueError(f"decay rate must be non-negative, got {self.gamma}")


def eps_from_delay(model: DecayModel, tau: float) -> float:
    if tau < 0:
        raise ValueError(f"delay time must be non-negative, got {tau}")
    if model.kind == "loss":
        return 1.0 - 10.0 ** (-model.gamma * tau / 10.0)
    return -math.expm1(-model.gamma * tau)


def _check_pauli_rates(e1: float, e2: float, e3: float) -> None:
    if min(e1, e2, e3) < 0:
        raise ValueError(f"Pauli rates must be non-negative, got {(e1, e2, e3)}")
    if e1 + e2 + e3 > 1.0 + 1e-15:
        raise ValueError(f"total Pauli rate exceeds 1: {e1 + e2 + e3}")


def _check_loss_rate(eps: float) -> None:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"loss rate must lie in [0, 1], got {eps}")


def loss_kraus(eps: float) -> tuple[np.ndarray, ...]:
    """Kraus operators of the single-qubit loss map in the (|0>,|1>,|vac>) basis.

    Qubit-vacuum coherences pick up sqrt(1-eps), as the amplitude-decay
    solution of the underlying master equation prescribes.
    """
    _check_loss_rate(eps)
    k0 = np.diag([np.sqrt(1 - eps), np.sqrt(1 - eps), 1.0]).astype(complex)
    k1 = np.zeros((3, 3), dtype=complex)
    k1[2, 0] = np.sqrt(eps)
    k2 = np.zeros((3, 3), dtype=complex)
    k2[2, 1] = np.sqrt(eps)
    return k0, k1, k2


def _apply_local(data: np.ndarray, n: int, ld: int, j: int, kraus) -> np.ndarray:
    """Sum_k K_k rho K_k^dagger with K_k acting on site j (1-based)."""
    t = data.reshape((ld,) * (2 * n))
    row, col = j - 1, n + j - 1
    out = np.zeros_like(t)
    for k in kraus:
        tk = np.moveaxis(np.tensordot(k, t, axes=([1], [row])), 0, row)
        tk = np.moveaxis(np.tensordot(tk, k.conj(), axes=([col], [1])), -1, col)
        out += tk
    return out.reshape(data.shape)


def _check_site(rho: DensityOp, j: int, ld: int) -> None:
    if rho.space.local_dim != ld:
        raise ValueError(f"channel needs local_dim={ld}, state has {rho.space.local_dim}")
    if not 1 <= j <= rho.space.n_qubits:
        raise IndexError(f"qubit index {j} out of range 1..{rho.space.n_qubits}")


def loss_single_array(data: np.ndarray, n: int, j: int, eps: float) -> np.ndarray:
    if eps == 0:
        return data
    return _apply_local(data, n, 3, j, loss_kraus(eps))


def loss_layer_array(data: np.ndarray, n: int, eps: float, order=None) -> np.ndarray:
    _check_loss_rate(eps)
    if eps == 0:
        return data
    kraus = loss_kraus(eps)
    for j in order or range(1, n + 1):
        data = _apply_local(data, n, 3, j, kraus)
    return data


def apply_loss_single(rho: DensityOp, j: int, eps: float) -> DensityOp:
    _check_site(rho, j, 3)
    _check_loss_rate(eps)
    return rho.with_data(loss_single_array(rho.data, rho.space.n_qubits, j, eps))


def apply_loss_layer(rho: DensityOp, eps: float, order=None) -> DensityOp:
    """Loss at rate ``eps`` on every qubit; ``order`` permutes the (commuting) sites."""
    if rho.space.local_dim != 3:
        raise ValueError("loss channel needs a vacuum-extended (local_dim=3) state")
    return rho.with_data(loss_layer_array(rho.data, rho.space.n_qubits, eps, order))


def _pauli_site(data: np.ndarray, n: int, j: int, rates) -> np.ndarray:
    e1, e2, e3 = rates
    t = data.reshape((2,) * (2 * n))
    row, col = j - 1, n + j - 1

    def blk(r: int, c: int) -> tuple:
        ix = [slice(None)] * (2 * n)
        ix[row], ix[col] = r, c
        return tuple(ix)

    # X, Y, Z conjugations only permute and sign-flip the 2x2 blocks of site j.
    a00, a01, a10, a11 = t[blk(0, 0)], t[blk(0, 1)], t[blk(1, 0)], t[blk(1, 1)]
    keep = 1.0 - (e1 + e2 + e3)
    out = np.empty_like(t)
    out[blk(0, 0)] = (keep + e3) * a00 + (e1 + e2) * a11
    out[blk(1, 1)] = (keep + e3) * a11 + (e1 + e2) * a00
    out[blk(0, 1)] = (keep - e3) * a01 + (e1 - e2) * a10
    out[blk(1, 0)] = (keep - e3) * a10 + (e1 - e2) * a01
    return out.reshape(data.shape)


def pauli_layer_array(data: np.ndarray, n: int, rates, order=None) -> np.ndarray:
    _check_pauli_rates(*rates)
    if sum(rates) == 0:
        return data
    for j in order or range(1, n + 1):
        data = _pauli_site(data, n, j, rates)
    return data


def apply_pauli_single(rho: DensityOp, j: int, eps1: float, eps2: float, eps3: float) -> DensityOp:
    """(1-eps) rho + eps1 X rho X + eps2 Y rho Y + eps3 Z rho Z on qubit ``j``."""
    _check_site(rho, j, 2)
    _check_pauli_rates(eps1, eps2, eps3)
    return rho.with_data(_pauli_site(rho.data, rho.space.n_qubits, j, (eps1, eps2, eps3)))


def apply_pauli_layer(rho: DensityOp, eps1: float, eps2: float, eps3: float, order=None) -> DensityOp:
    if rho.space.local_dim != 2:
        raise ValueError("Pauli channel needs a qubit (local_dim=2) state")
    return rho.with_data(pauli_layer_array(rho.data, rho.space.n_qubits, (eps1, eps2, eps3), order))


def pauli_on(P: np.ndarray, j: int, n: int) -> np.ndarray:
    """Single-qubit operator ``P`` on qubit ``j`` of ``n``, identity elsewhere."""
    return np.kron(np.kron(np.eye(2 ** (j - 1)), P), np.eye(2 ** (n - j)))


def pauli_first_order(rho: DensityOp, eps1: float, eps2: float, eps3: float) -> DensityOp:
    """First-order truncation of the n-qubit Pauli layer (reference only)."""
    n = rho.space.n_qubits
    eps = eps1 + eps2 + eps3
    out = (1 - n * eps) * rho.data
    for e, P in zip((eps1, eps2, eps3), PAULIS):
        for j in range(1, n + 1):
            Pj = pauli_on(P, j, n)
            out = out + e * Pj @ rho.data @ Pj
    return rho.with_data(out)
