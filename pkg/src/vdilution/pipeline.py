"""Noise-dilution pipeline: interleave noise layers with subcircuits.

For loss runs the state lives in the vacuum-extended 3**n space. Circuit
layers act only on the qubit sector, so any branch in which a qubit was lost
earlier is discarded by the next subcircuit (X -> W (P X P) W^dagger). This
produces the trace deficit (1 - eps/L)**((L - 1) n) of a diluted loss run.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import LossNoise, NoiseSpec, PauliNoise, loss_layer_array, pauli_layer_array
from .linalg import DensityOp, HilbertSpace, embed_array, ket_zero, qubit_sector_indices
from .unitaries import as_matrix


@dataclass(frozen=True)
class DilutionPlan:
    """Total noise ``noise`` split into ``len(circuits)`` equal layers."""

    circuits: Sequence
    noise: NoiseSpec
    renormalize_loss: bool = True

    def __post_init__(self):
        if len(self.circuits) < 1:
            raise ValueError("a dilution plan needs at least one subcircuit")

    @property
    def L_err(self) -> int:
        return len(self.circuits)

    @property
    def layer_noise(self) -> NoiseSpec:
        return self.noise.scaled(1.0 / self.L_err)


@dataclass(frozen=True)
class PipelineOutput:
    target: DensityOp
    noisy: DensityOp
    layer_states: list[np.ndarray] = field(repr=False)
    unitaries: list[np.ndarray] = field(repr=False)
    raw_trace: float = 1.0

    @property
    def L_err(self) -> int:
        return len(self.layer_states)

    @property
    def n_qubits(self) -> int:
        return self.target.space.n_qubits


def _matrices(circuits) -> list[np.ndarray]:
    mats = [as_matrix(c) for c in circuits]
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise ValueError("all subcircuits must share one dimension")
    if d & (d - 1) or d < 2:
        raise ValueError(f"subcircuit dimension must be 2**n, got {d}")
    return mats


def _layer_states(mats: list[np.ndarray]) -> list[np.ndarray]:
    n = mats[0].shape[0].bit_length() - 1
    psi = ket_zero(n)
    states = []
    for w in mats:
        psi = w @ psi
        states.append(np.outer(psi, psi.conj()))
    return states


def target_of(circuits) -> DensityOp:
    """Noiseless output W_L ... W_1 |0><0| W_1^dagger ... W_L^dagger."""
    mats = _matrices(circuits)
    n = mats[0].shape[0].bit_length() - 1
    return DensityOp(HilbertSpace(n, 2), _layer_states(mats)[-1])


def run_pauli(plan: DilutionPlan) -> PipelineOutput:
    if not isinstance(plan.noise, PauliNoise):
        raise TypeError("run_pauli needs Pauli noise")
    mats = _matrices(plan.circuits)
    n = mats[0].shape[0].bit_length() - 1
    rates = plan.layer_noise.rates
    states = _layer_states(mats)
    rho = np.zeros_like(states[0])
    rho[0, 0] = 1.0
    for w in mats:
        rho = w @ rho @ w.conj().T
        rho = pauli_layer_array(rho, n, rates)
    space = HilbertSpace(n, 2)
    return PipelineOutput(
        target=DensityOp(space, states[-1]),
        noisy=DensityOp(space, rho),
        layer_states=states,
        unitaries=mats,
        raw_trace=float(np.trace(rho).real),
    )


def run_loss(plan: DilutionPlan) -> PipelineOutput:
    if not isinstance(plan.noise, LossNoise):
        raise TypeError("run_loss needs loss noise")
    mats = _matrices(plan.circuits)
    n = mats[0].shape[0].bit_length() - 1
    eps = plan.layer_noise.eps
    idx = qubit_sector_indices(n)
    sector = np.ix_(idx, idx)
    states = _layer_states(mats)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    for w in mats:
        rho = w @ rho @ w.conj().T
        big = loss_layer_array(embed_array(rho, n), n, eps)
        # next subcircuit sees only the vacuum-free block
        rho = big[sector]
    raw_trace = float(np.trace(big).real)
    if plan.renormalize_loss:
        big = big / raw_trace
    return PipelineOutput(
        target=DensityOp(HilbertSpace(n, 2), states[-1]),
        noisy=DensityOp(HilbertSpace(n, 3), big),
        layer_states=states,
        unitaries=mats,
        raw_trace=raw_trace,
    )


def run(plan: DilutionPlan) -> PipelineOutput:
    if isinstance(plan.noise, LossNoise):
        return run_loss(plan)
    return run_pauli(plan)
