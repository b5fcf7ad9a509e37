"""Random-state helpers shared by the test modules."""
import numpy as np

from vdilution.linalg import DensityOp, HilbertSpace


def random_density(dim: int, rng, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_ket(dim: int, rng) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def density(n: int, data, local_dim: int = 2) -> DensityOp:
    return DensityOp(HilbertSpace(n, local_dim), data)
