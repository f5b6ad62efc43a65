"""States, channels and entropic quantities.

Density operators and pure states are plain numpy arrays (2-D Hermitian
matrices / 1-D unit vectors); structured objects (Kraus channels, isometries,
classical-quantum ensembles) get small frozen dataclasses with validation.
All entropies and informations are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qcore
from .qcore import CLIP_TOL, NEG_EIG_TOL, partial_trace

__all__ = [
    "CqState",
    "Isometry",
    "KrausChannel",
    "SchmidtDecomposition",
    "apply_channel",
    "check_density",
    "check_pure",
    "cond_mutual_info",
    "depolarizing_channel",
    "entropy_of_probs",
    "heisenberg_weyl",
    "holevo_info",
    "identity_channel",
    "isometric_extension",
    "max_entangled",
    "mutual_info",
    "projector",
    "purify",
    "random_density",
    "random_kraus_channel",
    "random_pure",
    "random_unitary",
    "replacer_channel",
    "ricochet_check",
    "schmidt",
    "unitary_channel",
    "vn_entropy",
]


def check_density(rho, tol: float = 1e-9, name: str = "state") -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; returns the array."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name}: density operator must be square, got {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise ValueError(f"{name}: Hermiticity residual {herm:.3g}")
    tr = abs(rho.trace() - 1.0)
    if tr > tol:
        raise ValueError(f"{name}: trace deviates from 1 by {tr:.3g}")
    wmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if wmin < -NEG_EIG_TOL:
        raise ValueError(f"{name}: negative eigenvalue {wmin:.3g}")
    return rho


def check_pure(psi, tol: float = 1e-9, name: str = "state") -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    nrm = abs(np.vdot(psi, psi) - 1.0)
    if nrm > tol:
        raise ValueError(f"{name}: squared norm deviates from 1 by {nrm:.3g}")
    return psi


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    dim_in: int
    dim_out: int
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus_ops)
        object.__setattr__(self, "kraus_ops", ops)
        for k in ops:
            if k.shape != (self.dim_out, self.dim_in):
                raise ValueError(
                    f"Kraus operator shape {k.shape} != ({self.dim_out}, {self.dim_in})"
                )
        res = self.completeness_residual()
        if res > 1e-9:
            raise ValueError(f"Kraus completeness residual {res:.3g}")

    def completeness_residual(self) -> float:
        acc = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.abs(acc - np.eye(self.dim_in)).max())

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.complex128)
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for k in self.kraus_ops:
            out += k @ rho @ k.conj().T
        return out


@dataclass(frozen=True)
class Isometry:
    """V with V†V = I, mapping dim_in into dim_out >= dim_in."""

    dim_in: int
    dim_out: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.shape != (self.dim_out, self.dim_in):
            raise ValueError(f"isometry shape {m.shape} != ({self.dim_out}, {self.dim_in})")
        if self.dim_out < self.dim_in:
            raise ValueError("isometry requires dim_out >= dim_in")
        res = np.abs(m.conj().T @ m - np.eye(self.dim_in)).max()
        if res > 1e-9:
            raise ValueError(f"isometry residual {res:.3g}")

    def as_channel(self) -> KrausChannel:
        return KrausChannel(self.dim_in, self.dim_out, (self.matrix,))


@dataclass(frozen=True)
class CqState:
    """Classical-quantum ensemble: classical label s with probability probs[s]
    steering the quantum block blocks[s]."""

    labels: tuple
    probs: np.ndarray
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        blocks = tuple(np.asarray(b, dtype=np.complex128) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()}")
        if len(self.labels) != len(p) or len(blocks) != len(p):
            raise ValueError("labels, probs and blocks must have equal length")
        dims = {b.shape for b in blocks}
        if len(dims) > 1:
            raise ValueError(f"blocks have mixed dims {dims}")

    @property
    def block_dim(self) -> int:
        return self.blocks[0].shape[0]

    def average(self) -> np.ndarray:
        out = np.zeros_like(self.blocks[0])
        for p, b in zip(self.probs, self.blocks):
            out += p * b
        return out


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray           # nonnegative, descending
    left_basis: np.ndarray             # columns
    right_basis: np.ndarray            # columns

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.left_basis.shape[0] * self.right_basis.shape[0], dtype=np.complex128)
        for i, c in enumerate(self.coefficients):
            out += c * np.kron(self.left_basis[:, i], self.right_basis[:, i])
        return out


def entropy_of_probs(p: np.ndarray, clip: float = 1e-12) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > clip]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def vn_entropy(rho) -> float:
    """Von Neumann entropy in bits; eigenvalues below clip contribute 0."""
    rho = np.asarray(rho, dtype=np.complex128)
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return entropy_of_probs(w)


def mutual_info(rho_ab, dim_a: int, dim_b: int) -> float:
    """I(A;B) = H(A) + H(B) - H(AB) of a bipartite state."""
    rho_ab = np.asarray(rho_ab, dtype=np.complex128)
    if rho_ab.shape[0] != dim_a * dim_b:
        raise ValueError(f"state dim {rho_ab.shape[0]} != {dim_a}*{dim_b}")
    ha = vn_entropy(partial_trace(rho_ab, [dim_a, dim_b], [0]))
    hb = vn_entropy(partial_trace(rho_ab, [dim_a, dim_b], [1]))
    return ha + hb - vn_entropy(rho_ab)


def cond_mutual_info(cq: CqState, dim_a: int, dim_b: int) -> float:
    """I(A;B|S) for a classical conditioning system S: the q(s)-average of the
    per-block mutual informations."""
    if cq.block_dim != dim_a * dim_b:
        raise ValueError(f"block dim {cq.block_dim} != {dim_a}*{dim_b}")
    return float(sum(p * mutual_info(b, dim_a, dim_b) for p, b in zip(cq.probs, cq.blocks)))


def holevo_info(cq: CqState) -> float:
    """I(S;A) of a cq state: H(avg) - sum_s q(s) H(block s)."""
    return vn_entropy(cq.average()) - float(
        sum(p * vn_entropy(b) for p, b in zip(cq.probs, cq.blocks))
    )


def apply_channel(ch: KrausChannel, rho, dims=None, target: int = 0) -> np.ndarray:
    """Apply a channel to one tensor factor of a multipartite density matrix.

    ``dims`` lists the factor dimensions (defaults to a single factor);
    ``dims[target]`` must equal ``ch.dim_in``.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if dims is None:
        dims = [ch.dim_in]
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != rho.shape[0]:
        raise ValueError(f"dims {dims} do not match state dim {rho.shape[0]}")
    if dims[target] != ch.dim_in:
        raise ValueError(f"dims[{target}]={dims[target]} != channel input {ch.dim_in}")
    if len(dims) == 1:
        return ch(rho)
    before = int(np.prod(dims[:target])) if target else 1
    after = int(np.prod(dims[target + 1:])) if target + 1 < len(dims) else 1
    t = rho.reshape(before, ch.dim_in, after, before, ch.dim_in, after)
    out_dim = before * ch.dim_out * after
    out = np.zeros((before, ch.dim_out, after, before, ch.dim_out, after), dtype=np.complex128)
    for k in ch.kraus_ops:
        tmp = np.einsum("ab,xbyucv->xayucv", k, t)
        out += np.einsum("xayucv,dc->xayudv", tmp, k.conj())
    return out.reshape(out_dim, out_dim)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(d, d, (np.eye(d),))


def unitary_channel(u) -> KrausChannel:
    u = np.asarray(u, dtype=np.complex128)
    return KrausChannel(u.shape[1], u.shape[0], (u,))


def depolarizing_channel(d: int) -> KrausChannel:
    """Completely depolarizing channel: rho -> I/d."""
    ops = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0 / np.sqrt(d)
            ops.append(e)
    return KrausChannel(d, d, tuple(ops))


def replacer_channel(psi) -> KrausChannel:
    """Channel that discards the input and outputs the pure state psi."""
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    d_out = psi.size
    d_in = d_out
    ops = tuple(np.outer(psi, np.eye(d_in)[j]) for j in range(d_in))
    return KrausChannel(d_in, d_out, ops)


def purify(rho) -> tuple[np.ndarray, int]:
    """Purification on A (x) J with dim J = rank(rho).

    Returns (pure state vector, dim_j); tracing out J recovers rho.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    spec = qcore.eig_hermitian(rho)
    w = spec.eigenvalues
    order = np.argsort(w)[::-1]
    w = w[order]
    v = spec.eigenvectors[:, order]
    support = w > CLIP_TOL
    w = w[support]
    v = v[:, support]
    dim_j = max(1, int(support.sum()))
    d = rho.shape[0]
    psi = np.zeros(d * dim_j, dtype=np.complex128)
    for x in range(w.size):
        e = np.zeros(dim_j, dtype=np.complex128)
        e[x] = 1.0
        psi += np.sqrt(w[x]) * np.kron(v[:, x], e)
    psi /= np.linalg.norm(psi)
    return psi, dim_j


def isometric_extension(ch: KrausChannel) -> Isometry:
    """Stinespring isometry V = sum_j K_j (x) |j>_E; output ordered (B, E)
    with the environment basis following the Kraus-operator list order."""
    nk = len(ch.kraus_ops)
    v = np.zeros((ch.dim_out * nk, ch.dim_in), dtype=np.complex128)
    for j, k in enumerate(ch.kraus_ops):
        e = np.zeros((nk, 1), dtype=np.complex128)
        e[j, 0] = 1.0
        v += np.kron(k, e)
    return Isometry(ch.dim_in, ch.dim_out * nk, v)


def heisenberg_weyl(d: int, a: int, b: int) -> np.ndarray:
    """Sigma(a,b) = X(a) Z(b) with X the cyclic shift and Z the phase."""
    if not (0 <= a < d and 0 <= b < d):
        raise ValueError(f"indices ({a},{b}) out of range for dimension {d}")
    j = np.arange(d)
    z = np.exp(2j * np.pi * b * j / d)
    sigma = np.zeros((d, d), dtype=np.complex128)
    sigma[(a + j) % d, j] = z
    return sigma


def max_entangled(d: int) -> np.ndarray:
    """|Phi> = sum_j |jj> / sqrt(D)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return psi


def schmidt(psi, dim_a: int, dim_b: int) -> SchmidtDecomposition:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.size != dim_a * dim_b:
        raise ValueError(f"state dim {psi.size} != {dim_a}*{dim_b}")
    m = psi.reshape(dim_a, dim_b)
    u, s, vh = np.linalg.svd(m)
    r = min(dim_a, dim_b)
    return SchmidtDecomposition(
        coefficients=s[:r], left_basis=u[:, :r], right_basis=vh.T[:, :r]
    )


def ricochet_check(u, d: int) -> float:
    """Residual of (U (x) 1)|Phi> = (1 (x) U^T)|Phi> on the D-dim pair."""
    u = np.asarray(u, dtype=np.complex128)
    phi = max_entangled(d)
    lhs = np.kron(u, np.eye(d)) @ phi
    rhs = np.kron(np.eye(d), u.T) @ phi
    return float(np.linalg.norm(lhs - rhs))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / rho.trace()


def random_kraus_channel(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Random channel from a Haar isometry into output (x) environment."""
    g = rng.normal(size=(d_out * n_kraus, d_in)) + 1j * rng.normal(size=(d_out * n_kraus, d_in))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    ops = tuple(q[j * d_out:(j + 1) * d_out, :].copy() for j in range(n_kraus))
    return KrausChannel(d_in, d_out, ops)
