import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from util import density, random_density, random_hermitian, random_ket
from vdilution.channels import PAULI_X, PAULI_Z
from vdilution.linalg import (
    MAX_DIM,
    DensityOp,
    HilbertSpace,
    InvariantError,
    UnitaryOp,
    embed_qubit_op,
    embed_state,
    hermitian_eig,
    matrix_power,
    partial_trace,
    qubit_sector_projector,
    tensor,
)
from vdilution.unitaries import haar_unitary


def test_total_dim_is_local_dim_power():
    for n in range(1, 6):
        assert HilbertSpace(n, 2).total_dim == 2**n
        assert HilbertSpace(n, 3).total_dim == 3**n
    assert HilbertSpace(2, 3).is_lossy and not HilbertSpace(2, 2).is_lossy


def test_space_rejects_bad_shapes():
    with pytest.raises(ValueError):
        HilbertSpace(0)
    with pytest.raises(ValueError):
        HilbertSpace(2, 4)
    with pytest.raises(ValueError):
        HilbertSpace(9, 3)  # 3**9 exceeds the dense limit
    assert HilbertSpace(8, 3).total_dim == MAX_DIM


def test_density_checks_hermiticity_and_records_trace():
    rng = np.random.default_rng(0)
    rho = random_density(4, rng)
    op = density(2, 0.7 * rho)
    assert abs(op.trace_hint - 0.7) <= 1e-12
    bad = rho.copy()
    bad[0, 1] += 1e-9
    with pytest.raises(InvariantError):
        density(2, bad)
    with pytest.raises(ValueError):
        density(2, np.eye(3))


def test_density_is_read_only():
    op = density(1, np.eye(2) / 2)
    with pytest.raises(ValueError):
        op.data[0, 0] = 1.0


def test_check_psd():
    density(1, np.diag([1.0, 0.0])).check_psd()
    with pytest.raises(InvariantError):
        density(1, np.diag([1.1, -0.1])).check_psd()


def test_tensor_examples():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
    zz = tensor(PAULI_Z, PAULI_Z)
    ket00 = np.array([1, 0, 0, 0])
    assert np.allclose(zz @ ket00, ket00)
    assert tensor(np.eye(3), np.eye(3)).shape == (9, 9)


def test_tensor_leftmost_factor_is_qubit_one():
    # X on qubit 1 flips the most significant bit
    x1 = tensor(PAULI_X, np.eye(2))
    assert np.allclose(x1 @ np.array([1, 0, 0, 0]), [0, 0, 1, 0])


def test_hermitian_eig_examples():
    lam, _ = hermitian_eig(np.diag([0.4, 0.6]))
    assert np.allclose(lam, [0.6, 0.4])
    plus = np.array([1, 1]) / np.sqrt(2)
    lam, vecs = hermitian_eig(np.outer(plus, plus))
    assert np.allclose(lam, [1, 0], atol=1e-14)
    assert abs(abs(np.vdot(vecs.data[:, 0], plus)) - 1) < 1e-12


def test_hermitian_eig_reconstructs():
    h = random_hermitian(8, np.random.default_rng(1))
    lam, v = hermitian_eig(h)
    assert np.all(np.diff(lam) <= 0)
    assert np.abs(v.data @ np.diag(lam) @ v.H - h).max() <= 1e-10


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(InvariantError):
        hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_matrix_power_examples():
    rho = density(1, np.diag([0.6, 0.4]))
    assert matrix_power(rho, 1) is rho
    assert np.allclose(matrix_power(rho, 2).data, np.diag([0.36, 0.16]))
    with pytest.raises(ValueError):
        matrix_power(rho, 0)


def test_matrix_power_eig_and_multiply_agree():
    rho = density(2, random_density(4, np.random.default_rng(2)))
    a = matrix_power(rho, 3, "eig").data
    b = matrix_power(rho, 3, "multiply").data
    assert np.abs(a - b).max() <= 1e-10


def test_matrix_power_clamps_small_negative_eigenvalues():
    data = np.diag([1.0, -5e-11])
    assert np.allclose(matrix_power(density(1, data), 2).data, np.diag([1.0, 0.0]))
    with pytest.raises(InvariantError):
        matrix_power(density(1, np.diag([1.0, -1e-6])), 2)


def test_partial_trace_examples():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(DensityOp.from_ket(HilbertSpace(2), bell), 1).data, np.eye(2) / 2)
    rng = np.random.default_rng(3)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    assert np.allclose(partial_trace(density(2, np.kron(r1, r2)), 2).data, r1)
    with pytest.raises(IndexError):
        partial_trace(density(2, np.kron(r1, r2)), 3)


def test_partial_trace_conserves_trace_and_chains_to_scalar():
    psi = random_ket(8, np.random.default_rng(4))
    rho = DensityOp.from_ket(HilbertSpace(3), psi)
    for j in (1, 2, 3):
        assert abs(partial_trace(rho, j).trace() - 1) <= 1e-12
    reduced = partial_trace(partial_trace(rho, 3), 2)
    assert abs(reduced.trace() - rho.trace()) <= 1e-12


def test_partial_trace_on_lossy_space():
    rng = np.random.default_rng(5)
    a, b = random_density(3, rng), random_density(3, rng)
    out = partial_trace(DensityOp(HilbertSpace(2, 3), np.kron(a, b)), 1)
    assert out.space == HilbertSpace(1, 3)
    assert np.allclose(out.data, b)


def test_sector_projector_examples():
    assert np.allclose(qubit_sector_projector(HilbertSpace(1, 3)), np.diag([1, 1, 0]))
    P2 = qubit_sector_projector(HilbertSpace(2, 3))
    assert P2.shape == (9, 9) and np.linalg.matrix_rank(P2) == 4
    for n in range(1, 5):
        assert np.trace(qubit_sector_projector(HilbertSpace(n, 3))).real == 2**n
    with pytest.raises(ValueError):
        qubit_sector_projector(HilbertSpace(2, 2))


def test_embed_examples():
    for n in (1, 2, 3):
        space = HilbertSpace(n, 3)
        assert np.array_equal(embed_qubit_op(np.eye(2**n), space), qubit_sector_projector(space))
    ex = embed_qubit_op(PAULI_X, HilbertSpace(1, 3))
    assert np.allclose(ex @ [1, 0, 0], [0, 1, 0])
    assert np.allclose(ex @ [0, 0, 1], 0)
    w = haar_unitary(4, 6).data
    space = HilbertSpace(2, 3)
    assert np.allclose(embed_qubit_op(w, space) @ embed_qubit_op(w.conj().T, space), qubit_sector_projector(space))
    with pytest.raises(ValueError):
        embed_qubit_op(np.eye(2), space)


def test_embed_state_places_qubit_block():
    rho = density(2, random_density(4, np.random.default_rng(7)))
    big = embed_state(rho)
    assert big.space == HilbertSpace(2, 3)
    # |01> sits at base-3 index 1, |10> at 3
    assert np.isclose(big.data[1, 3], rho.data[1, 2])
    assert embed_state(big) is big


def test_unitary_op_rejects_non_unitary():
    with pytest.raises(InvariantError):
        UnitaryOp(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        UnitaryOp(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 3), M=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_matrix_power_trace_matches_eigenvalues(n, M, seed):
    data = random_density(2**n, np.random.default_rng(seed))
    lam = np.linalg.eigvalsh(data)
    out = matrix_power(density(n, data), M)
    assert abs(out.trace() - np.sum(lam**M)) <= 1e-12
    out.check_psd()
