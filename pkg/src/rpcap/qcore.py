"""Dense complex linear algebra for finite-dimensional quantum operators.

Everything here works on plain ``numpy`` arrays of ``complex128``: matrices are
2-D row-major arrays, vectors are 1-D. Dimensions stay small (a few thousand at
most), so no sparse formats are used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CLIP_TOL",
    "NEG_EIG_TOL",
    "Spectrum",
    "eig_hermitian",
    "partial_trace",
    "permute_systems",
    "permute_vector",
    "psd_leq",
    "spectral_function",
    "tensor",
    "tensor_product",
    "trace_distance",
]

# Eigenvalues in [-CLIP_TOL, CLIP_TOL] are treated as exact zeros; negative
# eigenvalues above -NEG_EIG_TOL are rounding noise on PSD inputs.
CLIP_TOL = 1e-10
NEG_EIG_TOL = 1e-8


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
    return m


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product: entry ((i1,i2),(j1,j2)) = a[i1,j1] * b[i2,j2]."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def tensor(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = _as_matrix(ops[0])
    for op in ops[1:]:
        out = np.kron(out, _as_matrix(op))
    return out


def partial_trace(m, dims, keep) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    ``dims`` lists the factor dimensions of a square matrix on their tensor
    product; ``keep`` is an iterable of factor indices. Kept factors stay in
    their original order.
    """
    m = _as_matrix(m)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(
            f"dimension mismatch: matrix is {m.shape}, dims {dims} give {total}"
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    # Row axis i carries label i, column axis i carries label n+i; tying a
    # traced factor's column label back to its row label contracts it.
    labels = list(range(n)) + [n + i for i in range(n)]
    for i in range(n):
        if i not in keep:
            labels[n + i] = i
    out_labels = [i for i in keep] + [n + i for i in keep]
    res = np.einsum(t, labels, out_labels)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.ascontiguousarray(res.reshape(d_keep, d_keep))


def permute_systems(m, dims, perm) -> np.ndarray:
    """Reorder tensor factors of a square matrix; ``perm[i]`` is the old index
    of the factor placed at new position ``i``."""
    m = _as_matrix(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"perm {perm} is not a permutation of {n} factors")
    t = m.reshape(dims + dims)
    axes = perm + [p + n for p in perm]
    t = t.transpose(axes)
    total = int(np.prod(dims))
    return np.ascontiguousarray(t.reshape(total, total))


def permute_vector(v, dims, perm) -> np.ndarray:
    """Reorder tensor factors of a vector, same convention as permute_systems."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    dims = [int(d) for d in dims]
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(dims))):
        raise ValueError(f"perm {perm} is not a permutation of {len(dims)} factors")
    return np.ascontiguousarray(v.reshape(dims).transpose(perm).ravel())


@dataclass(frozen=True)
class Spectrum:
    """Hermitian eigendecomposition, eigenvalues ascending, eigenvectors as
    orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(h) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix (symmetrized internally)."""
    h = _as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"matrix must be square, got {h.shape}")
    hs = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(hs)
    return Spectrum(eigenvalues=w, eigenvectors=v)


def spectral_function(h, f: str, clip_tol: float = CLIP_TOL) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    ``f`` is one of ``log2``, ``sqrt``, ``inv_sqrt_support``. Eigenvalues in
    ``[-clip_tol, clip_tol]`` count as zero; zero eigenvalues map to 0 for
    ``log2`` and ``inv_sqrt_support`` (support convention).
    """
    if clip_tol < 0:
        raise ValueError("clip_tol must be nonnegative")
    spec = eig_hermitian(h)
    w = spec.eigenvalues.copy()
    w[np.abs(w) <= clip_tol] = 0.0
    if f in ("sqrt", "log2") and np.any(w < 0):
        worst = w.min()
        raise ValueError(f"{f} undefined for eigenvalue {worst} below -clip_tol")
    out = np.zeros_like(w)
    sup = w > 0
    if f == "log2":
        out[sup] = np.log2(w[sup])
    elif f == "sqrt":
        out[sup] = np.sqrt(w[sup])
    elif f == "inv_sqrt_support":
        # negatives outside the clip window are zeroed, not an error: the
        # support pseudo-inverse only ever sees PSD inputs up to rounding
        out[sup] = 1.0 / np.sqrt(w[sup])
    else:
        raise ValueError(f"unknown spectral function tag {f!r}")
    v = spec.eigenvectors
    return (v * out) @ v.conj().T


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    rho = _as_matrix(rho)
    sigma = _as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    diff = 0.5 * (rho - sigma)
    diff = 0.5 * (diff + diff.conj().T)
    w = np.linalg.eigvalsh(diff)
    return float(np.abs(w).sum())


def psd_leq(a, b, tol: float = 1e-9) -> bool:
    """True iff a <= b in the positive-semidefinite order, up to tol."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = b - a
    d = 0.5 * (d + d.conj().T)
    return float(np.linalg.eigvalsh(d)[0]) >= -tol
