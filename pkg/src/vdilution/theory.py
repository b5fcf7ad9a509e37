"""Closed-form predictions and the Haar averages that feed them."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .channels import PAULIS
from .linalg import DensityOp, ket_zero
from .unitaries import _as_generator, haar_batch


# --------------------------------------------------------------------------
# two-design identities
# --------------------------------------------------------------------------


def swap_operator(d: int) -> np.ndarray:
    """Bipartite swap on C^d (x) C^d."""
    s = np.zeros((d * d, d * d))
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    s[(j * d + i).ravel(), (i * d + j).ravel()] = 1.0
    return s


@dataclass(frozen=True)
class TwoDesignContext:
    d: int
    swap: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "swap", swap_operator(self.d))


def _check_dim(op: np.ndarray, d: int, name: str) -> np.ndarray:
    op = np.asarray(op)
    if op.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got shape {op.shape}")
    return op


def twodesign_avg1(O1, d: int) -> np.ndarray:
    """E[V O V^dagger] = tr(O)/d * 1."""
    O1 = _check_dim(O1, d, "O1")
    return np.trace(O1) / d * np.eye(d)


def twodesign_avg2(O2, ctx: TwoDesignContext) -> np.ndarray:
    """E[V^{(x)2} O V^{dagger (x)2}] for a d^2 x d^2 operator O."""
    d = ctx.d
    O2 = _check_dim(O2, d * d, "O2")
    t1 = np.trace(O2)
    ts = np.trace(O2 @ ctx.swap)
    D = d * d - 1
    return (t1 / D - ts / (d * D)) * np.eye(d * d) + (ts / D - t1 / (d * D)) * ctx.swap


def twodesign_avg3(A, B, C, ctx: TwoDesignContext) -> np.ndarray:
    """E[V A V^dagger B V C V^dagger] for d x d operators."""
    d = ctx.d
    A, B, C = (_check_dim(x, d, name) for x, name in ((A, "A"), (B, "B"), (C, "C")))
    D = d * d - 1
    trA, trB, trC, trAC = np.trace(A), np.trace(B), np.trace(C), np.trace(A @ C)
    I = np.eye(d)
    return (trA * trC * B + trB * trAC * I) / D - (trA * trB * trC * I + trAC * B) / (d * D)


# --------------------------------------------------------------------------
# loss channel
# --------------------------------------------------------------------------


def mse_loss_closed_M1(n: int, eps: float, L_err: int) -> float:
    d = 2**n
    return (eps / L_err) ** 2 * (n * (d + 4) / (2 * (d + 1)) + n * n)


def avg_purity_exact(n: int) -> float:
    """Haar average of tr[ptr_1(rho)^2] = (d + 4) / (2 (d + 1))."""
    d = 2**n
    return (d + 4) / (2 * (d + 1))


@dataclass(frozen=True)
class LossAverages:
    n: int
    M: int
    avg_ptr_power: float
    avg_sum_sq: float
    sample_count: int = 0
    stderr_ptr_power: float = 0.0
    stderr_sum_sq: float = 0.0


def mse_loss_general(n: int, eps: float, L_err: int, M: int, avgs: LossAverages) -> float:
    if (avgs.n, avgs.M) != (n, M):
        raise ValueError(f"averages are for (n, M) = {(avgs.n, avgs.M)}, not {(n, M)}")
    return (eps / L_err) ** (2 * M) * (n * avgs.avg_ptr_power + avgs.avg_sum_sq)


_CHUNK = 1000


def haar_states(n: int, count: int, rng) -> np.ndarray:
    """U|0...0> for ``count`` Haar unitaries, shape (count, 2**n).

    Unitaries are drawn in chunks from one generator so memory stays bounded.
    """
    g = _as_generator(rng)
    parts = [haar_batch(2**n, min(_CHUNK, count - s), g)[:, :, 0] for s in range(0, count, _CHUNK)]
    return np.concatenate(parts) if parts else np.empty((0, 2**n), dtype=complex)


def qubit_marginal_spectra(psi: np.ndarray, n: int) -> np.ndarray:
    """Eigenvalues of each single-qubit marginal, shape (count, n, 2).

    For a pure state the nonzero spectrum of ptr_j(rho) equals that of the
    qubit-j marginal, so these give tr[ptr_j(rho)^k] for every k.
    """
    t = psi.reshape((psi.shape[0],) + (2,) * n)
    out = np.empty((psi.shape[0], n, 2))
    for j in range(n):
        a = np.moveaxis(t, j + 1, 1).reshape(psi.shape[0], 2, -1)
        out[:, j] = np.linalg.eigvalsh(a @ a.conj().transpose(0, 2, 1))
    return np.clip(out, 0.0, None)


def loss_average_samples(n: int, M: int, samples: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample tr[ptr_1(rho)^{2M}] and (sum_j tr[ptr_j(rho)^M])^2."""
    spec = qubit_marginal_spectra(haar_states(n, samples, rng), n)
    ptr_power = np.sum(spec[:, 0] ** (2 * M), axis=-1)
    sum_sq = np.sum(spec**M, axis=(1, 2)) ** 2
    return ptr_power, sum_sq


def estimate_loss_averages_all_M(n: int, Ms, samples: int, rng) -> dict[int, LossAverages]:
    """Loss averages for several M from one set of Haar states."""
    if n < 2:
        raise ValueError("loss averages need n >= 2")
    spec = qubit_marginal_spectra(haar_states(n, samples, rng), n)
    out = {}
    for M in Ms:
        a = np.sum(spec[:, 0] ** (2 * M), axis=-1)
        b = np.sum(spec**M, axis=(1, 2)) ** 2
        se = (lambda v: float(v.std(ddof=1) / np.sqrt(samples))) if samples > 1 else (lambda v: 0.0)
        out[M] = LossAverages(n, M, float(a.mean()), float(b.mean()), samples, se(a), se(b))
    return out


def estimate_loss_averages(n: int, M: int, samples: int, rng) -> LossAverages:
    if n < 2:
        raise ValueError("loss averages need n >= 2")
    a, b = loss_average_samples(n, M, samples, rng)
    return LossAverages(
        n, M, float(a.mean()), float(b.mean()), samples,
        float(a.std(ddof=1) / np.sqrt(samples)), float(b.std(ddof=1) / np.sqrt(samples)),
    )


# --------------------------------------------------------------------------
# Pauli channel
# --------------------------------------------------------------------------


def mse_pauli_closed_M1(n: int, eps_vec, L_err: int) -> float:
    e = np.asarray(eps_vec, dtype=float)
    eps = e.sum()
    d = 2**n
    D = (d + 1) * (d * d - 1)
    return float((n * eps) ** 2 * (d**3 / D - d / (L_err * D)) + n * d / (L_err * (d + 1)) * np.sum(e**2))


def pauli_a1_closed(n: int, L_err: int) -> float:
    """Two-design value of <tr[rho T_j^(l) T_j^(l)]>."""
    d = 2**n
    return L_err / (d + 1) + L_err * (L_err - 1) / (d + 1) ** 2


def avg_rhoT_exact(n: int, L_err: int) -> float:
    return L_err / (2**n + 1)


# column order of PauliAverages.raw
PAULI_FIELDS = (
    "rhoTT_same_l_same_j",
    "rhoTT_diff_l_same_j",
    "rhoTT_diff_j",
    "rhoT_rhoT_same_same",
    "rhoT_rhoT_diff_l_same_j",
    "rhoT_rhoT_diff_j",
)


@dataclass(frozen=True)
class PauliAverages:
    """Haar averages of tr[rho T T'] and tr[rho T] tr[rho T'] by index case.

    ``raw`` keeps the per-sample values (columns in ``PAULI_FIELDS`` order)
    so linear combinations can carry their own standard error.
    """

    n: int
    L_err: int
    rhoTT_same_l_same_j: float
    rhoTT_diff_l_same_j: float
    rhoTT_diff_j: float
    rhoT_rhoT_same_same: float
    rhoT_rhoT_diff_l_same_j: float
    rhoT_rhoT_diff_j: float
    sample_count: int = 0
    stderr: dict = field(default_factory=dict)
    imag_max: float = 0.0
    avg_rhoT: float = float("nan")
    raw: np.ndarray | None = field(default=None, repr=False)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in PAULI_FIELDS)


def pauli_T_vectors(psi_layers: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """T_j^(l) |psi> for every (l, j), with |psi> the final layer state.

    Uses T |psi> = sum_k <psi_k|P|psi_k> G_k P |psi_k>, G_k = W_L ... W_{k+1},
    which is T_j^(l) applied to the pure target without forming d x d
    matrices. Shape (3, n, d).
    """
    L, d = psi_layers.shape
    n = d.bit_length() - 1
    t = psi_layers.reshape((L,) + (2,) * n)
    out = np.zeros((3, n, d), dtype=complex)
    for li, P in enumerate(PAULIS):
        for j in range(n):
            p_psi = np.moveaxis(np.tensordot(P, t, axes=([1], [j + 1])), 0, j + 1).reshape(L, d)
            weights = np.einsum("ka,ka->k", psi_layers.conj(), p_psi)
            acc = np.zeros(d, dtype=complex)
            # propagate through the remaining subcircuits, innermost first
            for k in range(L):
                acc = acc + weights[k] * p_psi[k]
                if k + 1 < L:
                    acc = unitaries[k + 1] @ acc
            out[li, j] = acc
    return out


def _pauli_sample(unitaries: np.ndarray) -> tuple[np.ndarray, float]:
    L, d, _ = unitaries.shape
    n = d.bit_length() - 1
    psi = ket_zero(n)
    layers = np.empty((L, d), dtype=complex)
    for k in range(L):
        psi = unitaries[k] @ psi
        layers[k] = psi
    v = pauli_T_vectors(layers, unitaries).reshape(3 * n, d)
    gram = v.conj() @ v.T  # gram[a, b] = tr[rho T_a T_b]
    t = (psi.conj() @ v.T).real  # tr[rho T_a]
    pauli = np.repeat(np.arange(3), n)
    qubit = np.tile(np.arange(n), 3)
    same_l = pauli[:, None] == pauli[None, :]
    same_j = qubit[:, None] == qubit[None, :]
    tt = np.outer(t, t)
    cases = (same_l & same_j, ~same_l & same_j, ~same_j)
    g = gram.real
    row = [g[c].mean() if c.any() else np.nan for c in cases]
    row += [tt[c].mean() if c.any() else np.nan for c in cases]
    row.append(t.mean())
    imag = np.abs(gram.imag[cases[0] | cases[1]]).max()
    return np.array(row), float(imag)


def pauli_average_samples(n: int, L_err: int, samples: int, rng) -> tuple[np.ndarray, float]:
    """Per-sample index-case averages, shape (samples, 7); last column is tr[rho T]."""
    d = 2**n
    g = _as_generator(rng)
    rows, imag = [], 0.0
    for start in range(0, samples, _CHUNK):
        count = min(_CHUNK, samples - start)
        W = haar_batch(d, count * L_err, g).reshape(count, L_err, d, d)
        for s in range(count):
            row, im = _pauli_sample(W[s])
            rows.append(row)
            imag = max(imag, im)
    return np.array(rows), imag


def estimate_pauli_averages(n: int, L_err: int, samples: int, rng) -> PauliAverages:
    raw, imag = pauli_average_samples(n, L_err, samples, rng)
    mean = raw.mean(axis=0)
    se = raw.std(axis=0, ddof=1) / np.sqrt(samples) if samples > 1 else np.zeros(raw.shape[1])
    return PauliAverages(
        n, L_err, *map(float, mean[:6]), sample_count=samples,
        stderr={f: float(s) for f, s in zip(PAULI_FIELDS, se)},
        imag_max=imag, avg_rhoT=float(mean[6]), raw=raw[:, :6],
    )


def _pauli_weights(n: int, eps_vec, L_err: int) -> np.ndarray:
    """Coefficients of (a1-b1, a2-b2, a3-b3) in the M >= 2 MSE.

    Splitting sum_{l,l'} eps_l eps_l' sum_{j,j'} into index cases gives
    n sum eps_l^2 (same l, same j), n (eps^2 - sum eps_l^2) (l != l', same j)
    and n (n-1) eps^2 (j != j'); for depolarizing noise these are
    3n, 6n and 9n(n-1) times (eps/3)^2.
    """
    e = np.asarray(eps_vec, dtype=float)
    eps, sq = e.sum(), np.sum(e**2)
    return 2.0 / L_err**2 * np.array([n * sq, n * (eps**2 - sq), n * (n - 1) * eps**2])


def mse_pauli_Mge2(n: int, eps_vec, L_err: int, avgs: PauliAverages, exact_a1: bool = False) -> float:
    if (avgs.n, avgs.L_err) != (n, L_err):
        raise ValueError(f"averages are for (n, L) = {(avgs.n, avgs.L_err)}, not {(n, L_err)}")
    a1 = pauli_a1_closed(n, L_err) if exact_a1 else avgs.rhoTT_same_l_same_j
    a = np.array([a1, avgs.rhoTT_diff_l_same_j, avgs.rhoTT_diff_j])
    b = np.array([avgs.rhoT_rhoT_same_same, avgs.rhoT_rhoT_diff_l_same_j, avgs.rhoT_rhoT_diff_j])
    diff = np.nan_to_num(a - b)
    return float(_pauli_weights(n, eps_vec, L_err) @ diff)


def mse_pauli_Mge2_stderr(n: int, eps_vec, L_err: int, avgs: PauliAverages) -> float:
    """Standard error of :func:`mse_pauli_Mge2` from the per-sample values."""
    if avgs.raw is None or avgs.sample_count < 2:
        return float("nan")
    diff = np.nan_to_num(avgs.raw[:, :3] - avgs.raw[:, 3:6])
    per_sample = diff @ _pauli_weights(n, eps_vec, L_err)
    return float(per_sample.std(ddof=1) / np.sqrt(avgs.sample_count))


# --------------------------------------------------------------------------
# error-component spectrum
# --------------------------------------------------------------------------


def hellinger(spectrum, d: int) -> float:
    """Hellinger distance between a spectrum (zero-padded to length d) and uniform."""
    lam = np.asarray(spectrum, dtype=float)
    if lam.size > d:
        raise ValueError(f"spectrum has {lam.size} entries, more than d = {d}")
    if lam.min(initial=0.0) < -1e-12:
        raise ValueError("spectrum has negative entries")
    lam = np.clip(lam, 0.0, None)
    if abs(lam.sum() - 1) > 1e-8:
        raise ValueError(f"spectrum must sum to 1, got {lam.sum()}")
    lam = np.concatenate([lam, np.zeros(d - lam.size)])
    return float(np.sqrt(0.5 * np.sum((np.sqrt(lam) - 1 / np.sqrt(d)) ** 2)))


def error_spectrum(rho_err, zero_tol: float = 1e-12) -> np.ndarray:
    """Descending eigenvalues of a normalized error component.

    Eigenvalues with magnitude below ``zero_tol`` are set to exactly zero:
    eigvalsh leaves ~1e-17 noise on the null space, and its square root
    would otherwise shift a Hellinger distance by ~1e-9 per zero mode.
    """
    data = rho_err.data if isinstance(rho_err, DensityOp) else np.asarray(rho_err)
    lam = np.linalg.eigvalsh(0.5 * (data + data.conj().T))[::-1]
    lam = np.where(np.abs(lam) < zero_tol, 0.0, lam)
    return lam


def cluster_spectrum(lam, tol: float = 1e-10) -> list[tuple[float, int]]:
    """Group sorted eigenvalues closer than ``tol`` into (mean value, multiplicity) pairs, ascending."""
    lam = np.sort(np.asarray(lam, dtype=float))
    groups: list[list[float]] = []
    for v in lam:
        if groups and v - groups[-1][-1] <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(float(np.mean(g)), len(g)) for g in groups]


def hellinger_loss_product(n: int, x: float) -> float:
    """Reference closed form for the product-state loss error component.

    Note: this expression exceeds the squared distance of the actual
    spectrum by 1/(2 * 3**n); see :func:`hellinger_loss_product_exact`.
    """
    if not 0 < x < 1:
        raise ValueError(f"x = eps/L must lie in (0, 1), got {x}")
    bracket = (1 + np.sqrt(x / (1 - x))) ** n - 1
    h2 = 1 + 1 / (2 * 3**n) - (1 - x) ** (n / 2) / (3 ** (n / 2) * np.sqrt(1 - (1 - x) ** n)) * bracket
    return float(np.sqrt(h2))


def hellinger_loss_product_exact(n: int, x: float) -> float:
    """Hellinger distance of the product-state loss spectrum, H^2 = 1 - sum sqrt(lam)/sqrt(d)."""
    if not 0 < x < 1:
        raise ValueError(f"x = eps/L must lie in (0, 1), got {x}")
    bracket = (1 + np.sqrt(x / (1 - x))) ** n - 1
    h2 = 1 - (1 - x) ** (n / 2) / (3 ** (n / 2) * np.sqrt(1 - (1 - x) ** n)) * bracket
    return float(np.sqrt(max(h2, 0.0)))


def loss_product_spectrum(n: int, x: float) -> list[tuple[float, int]]:
    """(eigenvalue, multiplicity) pairs of the normalized product-state loss error component."""
    norm = 1 - (1 - x) ** n
    pairs = [(0.0, 3**n - 2**n + 1)]
    pairs += [(x**k * (1 - x) ** (n - k) / norm, comb(n, k)) for k in range(1, n + 1)]
    return pairs


# --------------------------------------------------------------------------
# special case: error component orthogonal to the target
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumModel:
    d: int
    eps0: float
    M: int
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.d - 1,):
            raise ValueError(f"p must have length d-1 = {self.d - 1}, got {p.shape}")
        if p.min() < 0 or abs(p.sum() - 1) > 1e-10:
            raise ValueError("p must be a probability vector")
        if not 0 <= self.eps0 <= 1:
            raise ValueError(f"eps0 must lie in [0, 1], got {self.eps0}")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        object.__setattr__(self, "p", p)

    def with_p(self, p) -> SpectrumModel:
        return SpectrumModel(self.d, self.eps0, self.M, p)

    @classmethod
    def uniform(cls, d: int, eps0: float, M: int) -> SpectrumModel:
        return cls(d, eps0, M, np.full(d - 1, 1.0 / (d - 1)))


def _normalizer(m: SpectrumModel) -> float:
    return (1 - m.eps0) ** m.M + m.eps0**m.M * np.sum(m.p**m.M)


def special_case_mse(m: SpectrumModel) -> float:
    N = _normalizer(m)
    return float((1 - (1 - m.eps0) ** m.M / N) ** 2 + m.eps0 ** (2 * m.M) / N**2 * np.sum(m.p ** (2 * m.M)))


def extremal_A(m: SpectrumModel) -> np.ndarray:
    N = _normalizer(m)
    c = (1 - m.eps0) ** m.M
    s2 = np.sum(m.p ** (2 * m.M))
    return (c - c * c / N - m.eps0 ** (2 * m.M) / N * s2) * m.p ** (m.M - 1) + m.eps0**m.M * m.p ** (2 * m.M - 1)


def special_case_gradient(m: SpectrumModel) -> np.ndarray:
    """d MSE / d a_k under p_k = a_k^2 / sum a^2, evaluated at a = sqrt(p).

    Equals 4 M eps0^M / N^2 * a_k [A_k - sum_k' A_k' p_k'].
    """
    A = extremal_A(m)
    a = np.sqrt(m.p)
    N = _normalizer(m)
    return 4 * m.M * m.eps0**m.M / N**2 * a * (A - A @ m.p)


def special_case_mse_of_a(m: SpectrumModel, a: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    return special_case_mse(m.with_p(a**2 / np.sum(a**2)))


def steepest_descent(m: SpectrumModel, tol: float = 1e-9, max_iter: int = 100_000) -> tuple[np.ndarray, int]:
    """Minimize the special-case MSE over p by gradient descent in a.

    Step sizes come from the Barzilai-Borwein rule (doubled where the
    curvature estimate is negative) and are halved until the MSE does not
    increase. Stops once an update moves p by less than ``tol`` and the
    gradient, divided by its prefactor 4 M eps0^M / N^2, is below ``tol``;
    the second condition keeps a short step near a small a_k (where the
    gradient is proportionally small) from ending the search early.
    Returns (p, iterations).
    """
    def scaled_grad(model):
        N = _normalizer(model)
        return special_case_gradient(model) / (4 * model.M * model.eps0**model.M / N**2)

    if m.eps0 == 0:
        return m.p, 0
    a = np.sqrt(m.p)
    cur, f = m, special_case_mse(m)
    g = scaled_grad(cur)
    step = 1e-2 / max(np.abs(g).max(), 1e-300)
    for it in range(1, max_iter + 1):
        for _ in range(60):
            a_new = a - step * g
            a_new /= np.linalg.norm(a_new)
            nxt = cur.with_p(a_new**2)
            f_new = special_case_mse(nxt)
            if f_new <= f:
                break
            step *= 0.5
        g_new = scaled_grad(nxt)
        if np.abs(nxt.p - cur.p).max() < tol and np.abs(g_new).max() < tol:
            return nxt.p, it
        s, y = a_new - a, g_new - g
        sy = s @ y
        step = (s @ s) / sy if sy > 0 else 2 * step
        a, g, cur, f = a_new, g_new, nxt, f_new
    return cur.p, max_iter
