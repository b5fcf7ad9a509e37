"""Virtual distillation, MSE, error components and the power-iteration limit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import PAULIS, pauli_on
from .linalg import DensityOp, HilbertSpace, InvariantError, embed_state, power_array, qubit_sector_projector
from .pipeline import PipelineOutput


class DegenerateInputError(InvariantError):
    pass


@dataclass(frozen=True)
class DistillationResult:
    M: int
    state: DensityOp
    trace_of_power: float


def distill(rho_noisy: DensityOp, M: int) -> DistillationResult:
    """rho'^M / tr rho'^M."""
    powered = power_array(rho_noisy.data, M)
    tr = float(np.trace(powered).real)
    if tr <= 1e-300:
        raise DegenerateInputError(f"tr(rho^M) = {tr:.3e} is too small to normalize")
    return DistillationResult(M, DensityOp(rho_noisy.space, powered / tr), tr)


def dominant_eigenstate(rho_noisy: DensityOp, tol: float = 1e-12, max_iter: int = 100_000) -> DensityOp:
    """M -> infinity limit of distillation, by power iteration.

    Starts from the basis vector with the largest diagonal entry and
    restarts from the next basis vector if the iterate collapses or settles
    on a non-dominant eigenvector (a start orthogonal to the dominant one).
    """
    data = rho_noisy.data
    lam = np.linalg.eigvalsh(data)
    if len(lam) > 1 and lam[-1] - lam[-2] < 1e-8:
        raise DegenerateInputError(f"dominant eigenvalue is degenerate (gap {lam[-1] - lam[-2]:.3e})")
    dim = data.shape[0]
    start = int(np.argmax(data.diagonal().real))
    for attempt in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[(start + attempt) % dim] = 1.0
        for _ in range(max_iter):
            w = data @ v
            norm = np.linalg.norm(w)
            if norm < 1e-300:
                break
            w /= norm
            if abs(np.vdot(v, w)) ** 2 >= 1 - tol:
                if np.vdot(w, data @ w).real < 0.5 * (lam[-1] + lam[-2]):
                    break
                return DensityOp.from_ket(rho_noisy.space, w)
            v = w
        else:
            raise InvariantError("power iteration did not converge")
    raise InvariantError("power iteration stagnated from every starting vector")


def fidelity_with_pure(pure: DensityOp, sigma: DensityOp) -> float:
    return float(np.einsum("ij,ji->", pure.data, sigma.data).real)


def _common_space(target: DensityOp, candidate: DensityOp) -> tuple[DensityOp, DensityOp]:
    if target.space == candidate.space:
        return target, candidate
    if target.space.n_qubits == candidate.space.n_qubits:
        return embed_state(target), embed_state(candidate)
    raise ValueError(f"cannot compare states on {target.space} and {candidate.space}")


def mse(target: DensityOp, candidate: DensityOp) -> float:
    """Hilbert-Schmidt distance tr[(rho - sigma)^2]; qubit states are embedded
    into the vacuum-extended space when compared with lossy ones."""
    a, b = _common_space(target, candidate)
    diff = a.data - b.data
    return float(max(np.einsum("ij,ji->", diff, diff).real, 0.0))


def pauli_T_operators(out: PipelineOutput) -> np.ndarray:
    """T_j^(l) = sum_k G_k P_j^(l) rho_k P_j^(l) G_k^dagger, G_k = W_L ... W_{k+1}.

    Returned with shape (3, n, d, d) indexed by (Pauli l, qubit j).
    """
    n = out.n_qubits
    d = 2**n
    mats, states = out.unitaries, out.layer_states
    L = len(mats)
    # tails[k] = W_L ... W_{k+2} maps layer state k (0-based) to the output
    tails = [np.eye(d, dtype=complex)] * L
    acc = np.eye(d, dtype=complex)
    for k in range(L - 1, -1, -1):
        tails[k] = acc
        acc = acc @ mats[k]
    T = np.zeros((3, n, d, d), dtype=complex)
    for li, P in enumerate(PAULIS):
        for j in range(n):
            Pj = pauli_on(P, j + 1, n)
            for k in range(L):
                q = tails[k] @ Pj
                T[li, j] += q @ states[k] @ q.conj().T
    return T


def extract_error_component(out: PipelineOutput, kind: str, rates=(1.0, 1.0, 1.0)) -> DensityOp:
    """Normalized error component of the noisy state.

    Loss: the vacuum-containing block Q rho' Q. Pauli: the first-order
    combination sum_{l,j} eps_l T_j^(l) / (n eps L), built from the cached
    layer states; only the ratios of ``rates`` matter.
    """
    if kind == "loss":
        space = out.noisy.space
        Q = np.eye(space.total_dim) - qubit_sector_projector(space)
        err = Q @ out.noisy.data @ Q
        w = float(np.trace(err).real)
        if w <= 1e-300:
            raise DegenerateInputError("noisy state has no weight outside the qubit sector")
        return DensityOp(space, err / w)
    if kind == "pauli":
        rates = np.asarray(rates, dtype=float)
        if rates.sum() <= 0:
            raise DegenerateInputError("zero Pauli error weight")
        T = pauli_T_operators(out)
        err = np.einsum("l,ljab->ab", rates, T)
        err /= rates.sum() * out.n_qubits * out.L_err
        return DensityOp(HilbertSpace(out.n_qubits, 2), err)
    raise ValueError(f"unknown noise kind {kind!r}")
