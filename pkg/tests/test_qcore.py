import numpy as np
import pytest

from rpcap import qcore
from rpcap.quantum import max_entangled, projector, random_density

from conftest import PAULI_X, PAULI_Z


def test_tensor_product_identity():
    assert np.allclose(qcore.tensor_product(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_product_basis_projectors():
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    out = qcore.tensor_product(p0, p1)
    expect = np.zeros((4, 4))
    expect[1, 1] = 1.0
    assert np.allclose(out, expect)


def test_tensor_product_pauli_x_z():
    # expanded by hand from the definitions
    expect = np.array(
        [
            [0, 0, 1, 0],
            [0, 0, 0, -1],
            [1, 0, 0, 0],
            [0, -1, 0, 0],
        ],
        dtype=np.complex128,
    )
    assert np.allclose(qcore.tensor_product(PAULI_X, PAULI_Z), expect)


def test_partial_trace_max_entangled_is_maximally_mixed():
    phi = projector(max_entangled(2))
    assert np.allclose(qcore.partial_trace(phi, [2, 2], [0]), np.eye(2) / 2, atol=1e-12)


def test_partial_trace_product_state(rng):
    rho = random_density(2, rng)
    sigma = random_density(3, rng)
    out = qcore.partial_trace(np.kron(rho, sigma), [2, 3], [0])
    assert np.allclose(out, rho * sigma.trace(), atol=1e-12)


def _ptrace_oracle(m, da, db, keep_first):
    """Brute-force double-index summation."""
    if keep_first:
        out = np.zeros((da, da), dtype=np.complex128)
        for i in range(da):
            for k in range(da):
                out[i, k] = sum(m[i * db + j, k * db + j] for j in range(db))
    else:
        out = np.zeros((db, db), dtype=np.complex128)
        for j in range(db):
            for l in range(db):
                out[j, l] = sum(m[i * db + j, i * db + l] for i in range(da))
    return out


def test_partial_trace_against_index_sum(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = g + g.conj().T
    assert np.allclose(qcore.partial_trace(h, [2, 2], [0]), _ptrace_oracle(h, 2, 2, True), atol=1e-12)
    assert np.allclose(qcore.partial_trace(h, [2, 2], [1]), _ptrace_oracle(h, 2, 2, False), atol=1e-12)


def test_partial_trace_composes(rng):
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = g + g.conj().T
    two_step = qcore.partial_trace(qcore.partial_trace(h, [2, 2, 2], [0, 1]), [2, 2], [0])
    one_step = qcore.partial_trace(h, [2, 2, 2], [0])
    assert np.allclose(two_step, one_step, atol=1e-12)


def test_partial_trace_dim_mismatch():
    with pytest.raises(ValueError):
        qcore.partial_trace(np.eye(4), [2, 3], [0])


def test_eig_hermitian_pauli_z():
    spec = qcore.eig_hermitian(PAULI_Z)
    assert np.allclose(spec.eigenvalues, [-1.0, 1.0])


def test_eig_hermitian_maximally_mixed():
    spec = qcore.eig_hermitian(np.eye(2) / 2)
    assert np.allclose(spec.eigenvalues, [0.5, 0.5])


def test_eig_hermitian_ones_matrix():
    spec = qcore.eig_hermitian(np.ones((2, 2)))
    assert np.allclose(spec.eigenvalues, [0.0, 2.0], atol=1e-12)


def test_eig_hermitian_reconstruction(rng):
    for d in (2, 8, 64):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = g + g.conj().T
        spec = qcore.eig_hermitian(h)
        assert np.abs(spec.reconstruct() - h).max() <= 1e-9
        v = spec.eigenvectors
        assert np.abs(v.conj().T @ v - np.eye(d)).max() <= 1e-10


def test_eig_hermitian_non_square():
    with pytest.raises(ValueError):
        qcore.eig_hermitian(np.ones((2, 3)))


def test_spectral_function_sqrt():
    assert np.allclose(qcore.spectral_function(np.diag([4.0, 9.0]), "sqrt"), np.diag([2.0, 3.0]))


def test_spectral_function_inv_sqrt_support():
    out = qcore.spectral_function(np.diag([4.0, 0.0]), "inv_sqrt_support")
    assert np.allclose(out, np.diag([0.5, 0.0]))


def test_spectral_function_log2():
    assert np.allclose(qcore.spectral_function(np.eye(2) / 2, "log2"), -np.eye(2))


def test_spectral_function_domain_error():
    with pytest.raises(ValueError):
        qcore.spectral_function(np.diag([1.0, -1.0]), "sqrt")


def test_spectral_sqrt_squares_back(rng):
    for _ in range(5):
        rho = random_density(4, rng)
        root = qcore.spectral_function(rho, "sqrt")
        assert np.abs(root @ root - rho).max() <= 1e-8


def test_trace_distance_basic(rng):
    rho = random_density(3, rng)
    assert qcore.trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert qcore.trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    p, q = 0.8, 0.3
    assert qcore.trace_distance(np.diag([p, 1 - p]), np.diag([q, 1 - q])) == pytest.approx(abs(p - q))


def test_trace_distance_triangle(rng):
    for _ in range(10):
        a, b, c = (random_density(3, rng) for _ in range(3))
        lhs = qcore.trace_distance(a, c)
        rhs = qcore.trace_distance(a, b) + qcore.trace_distance(b, c)
        assert lhs <= rhs + 1e-10


def test_trace_distance_dim_mismatch():
    with pytest.raises(ValueError):
        qcore.trace_distance(np.eye(2), np.eye(3))


def test_psd_leq():
    assert qcore.psd_leq(np.zeros((2, 2)), np.eye(2), tol=0.0)
    assert not qcore.psd_leq(2 * np.eye(2), np.eye(2), tol=0.0)
    assert not qcore.psd_leq(np.eye(2) / 2, np.diag([0.6, 0.4]), tol=1e-12)


def test_permute_systems_round_trip(rng):
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    perm = [2, 0, 1]
    inv = [perm.index(i) for i in range(3)]
    once = qcore.permute_systems(g, [2, 2, 2], perm)
    back = qcore.permute_systems(once, [2, 2, 2], inv)
    assert np.allclose(back, g)
