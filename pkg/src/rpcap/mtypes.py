"""Classical method of types and quantum typical subspaces.

Sequences over an alphabet of size d are identified with their base-d digit
strings; sequence index = sum x_i * d^(n-1-i), so lexicographic sequence order
equals integer order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import qcore

__all__ = [
    "CoveringEstimate",
    "Projector",
    "TypeVector",
    "TypicalProjector",
    "all_types",
    "covering_monte_carlo",
    "is_jointly_typical",
    "is_typical",
    "sequence_digits",
    "sequences_of_type",
    "type_class_size",
    "type_of",
    "type_projector",
    "typical_projector",
    "typical_stats",
]

DIM_CAP = 4096


@dataclass(frozen=True)
class TypeVector:
    """Occurrence counts of each symbol in a length-n sequence."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.n:
            raise ValueError(f"counts {self.counts} do not form a type of length {self.n}")

    def empirical(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n


def type_of(xn, alphabet) -> TypeVector:
    alphabet = list(alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for x in xn:
        if x not in index:
            raise ValueError(f"symbol {x!r} not in alphabet")
        counts[index[x]] += 1
    return TypeVector(len(list(xn)), tuple(counts))


def type_class_size(t: TypeVector) -> int:
    """Multinomial coefficient n! / prod(counts!), exact integer."""
    size = math.factorial(t.n)
    for c in t.counts:
        size //= math.factorial(c)
    return size


def all_types(n: int, k: int) -> list[TypeVector]:
    """All types of length-n sequences over a k-letter alphabet, in ascending
    lexicographic order of the count vectors."""

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return [TypeVector(n, c) for c in sorted(compositions(n, k))]


def sequence_digits(n: int, dim: int) -> np.ndarray:
    """(dim^n, n) array of the base-dim digits of every sequence index."""
    total = dim ** n
    if total > DIM_CAP:
        raise ValueError(f"dim^n = {total} exceeds cap {DIM_CAP}")
    idx = np.arange(total)
    digits = np.empty((total, n), dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = idx % dim
        idx //= dim
    return digits


def sequences_of_type(t: TypeVector, dim: int) -> np.ndarray:
    """Sequence indices of the type class, in lexicographic sequence order."""
    digits = sequence_digits(t.n, dim)
    counts = np.stack([(digits == a).sum(axis=1) for a in range(dim)], axis=1)
    mask = np.all(counts == np.array(t.counts), axis=1)
    return np.nonzero(mask)[0]


def is_typical(xn, p, delta: float) -> bool:
    """Unconditional per-letter delta-typicality with the hard zero clause."""
    p = np.asarray(p, dtype=float)
    xn = list(xn)
    n = len(xn)
    counts = np.zeros(p.size)
    for x in xn:
        counts[x] += 1
    emp = counts / n
    for a in range(p.size):
        if p[a] > 0:
            if abs(emp[a] - p[a]) > delta + 1e-12:
                return False
        elif counts[a] > 0:
            return False
    return True


def is_jointly_typical(sn, xn, p_sx, delta: float) -> bool:
    """Joint delta-typicality of a pair of sequences."""
    sn = list(sn)
    xn = list(xn)
    if len(sn) != len(xn):
        raise ValueError(f"length mismatch: {len(sn)} vs {len(xn)}")
    p_sx = np.asarray(p_sx, dtype=float)
    n = len(sn)
    counts = np.zeros_like(p_sx)
    for a, b in zip(sn, xn):
        counts[a, b] += 1
    emp = counts / n
    for a in range(p_sx.shape[0]):
        for b in range(p_sx.shape[1]):
            if p_sx[a, b] > 0:
                if abs(emp[a, b] - p_sx[a, b]) > delta + 1e-12:
                    return False
            elif counts[a, b] > 0:
                return False
    return True


@dataclass(frozen=True)
class Projector:
    dim: int
    matrix: np.ndarray

    @property
    def rank(self) -> int:
        return int(round(float(self.matrix.trace().real)))


def type_projector(t: TypeVector, dim: int, n: int) -> Projector:
    """Projector onto the span of the computational sequences of type t."""
    if t.n != n or len(t.counts) != dim:
        raise ValueError(f"type {t} does not match layout (n={n}, dim={dim})")
    total = dim ** n
    if total > DIM_CAP:
        raise ValueError(f"dim^n = {total} exceeds cap {DIM_CAP}")
    diag = np.zeros(total)
    diag[sequences_of_type(t, dim)] = 1.0
    return Projector(total, np.diag(diag).astype(np.complex128))


@dataclass(frozen=True)
class TypicalProjector:
    """Projector onto the delta-typical subspace of rho^(x)n, plus the
    instance constant c for the 2^{n(H +- c delta)} spectral bounds."""

    matrix: np.ndarray
    c: float
    entropy: float
    typical_mass: float  # Tr(Pi rho^(x)n)

    @property
    def rank(self) -> int:
        return int(round(float(self.matrix.trace().real)))


def typical_projector(rho, n: int, delta: float) -> TypicalProjector:
    rho = np.asarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    if d ** n > DIM_CAP:
        raise ValueError(f"dim^n = {d ** n} exceeds cap {DIM_CAP}")
    spec = qcore.eig_hermitian(rho)
    p = spec.eigenvalues.copy()
    p[p < qcore.CLIP_TOL] = 0.0
    digits = sequence_digits(n, d)
    counts = np.stack([(digits == a).sum(axis=1) for a in range(d)], axis=1)
    emp = counts / n
    ok = np.ones(d ** n, dtype=bool)
    for a in range(d):
        if p[a] > 0:
            ok &= np.abs(emp[:, a] - p[a]) <= delta + 1e-12
        else:
            ok &= counts[:, a] == 0
    mass = float(np.prod(np.where(p > 0, p, 1.0) ** counts, axis=1)[ok].sum())
    vn = spec.eigenvectors
    v_n = vn
    for _ in range(n - 1):
        v_n = np.kron(v_n, vn)
    proj = (v_n * ok.astype(float)) @ v_n.conj().T
    sup = p[p > 0]
    c = float(-(np.log2(sup)).sum())
    h = float(-(sup * np.log2(sup)).sum())
    return TypicalProjector(matrix=proj, c=c, entropy=h, typical_mass=mass)


@dataclass(frozen=True)
class TypicalStats:
    """Mass and size of a delta-typical subspace, computed from the type
    decomposition alone (no cap on n)."""

    mass: float
    log2_rank: float
    entropy: float
    c: float


def typical_stats(probs, n: int, delta: float) -> TypicalStats:
    p = np.asarray(probs, dtype=float).copy()
    p[p < qcore.CLIP_TOL] = 0.0
    d = p.size
    mass = 0.0
    rank = 0
    for t in all_types(n, d):
        ok = True
        for a in range(d):
            if p[a] > 0:
                if abs(t.counts[a] / n - p[a]) > delta + 1e-12:
                    ok = False
                    break
            elif t.counts[a] > 0:
                ok = False
                break
        if not ok:
            continue
        size = type_class_size(t)
        rank += size
        logprob = sum(c * math.log(p[a]) for a, c in enumerate(t.counts) if c > 0)
        mass += size * math.exp(logprob)
    sup = p[p > 0]
    return TypicalStats(
        mass=mass,
        log2_rank=math.log2(rank) if rank else -math.inf,
        entropy=float(-(sup * np.log2(sup)).sum()),
        c=float(-np.log2(sup).sum()),
    )


# ---------------------------------------------------------------------------
# covering-lemma Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoveringEstimate:
    fail_prob_hat: float
    stderr: float
    trials: int


def _count_boxes(p_sx: np.ndarray, n: int, delta: float) -> np.ndarray:
    """Per-pair [lo, hi] bounds on the joint counts allowed by typicality."""
    s_size, x_size = p_sx.shape
    boxes = np.zeros((s_size, x_size, 2), dtype=np.int64)
    for a in range(s_size):
        for b in range(x_size):
            p = p_sx[a, b]
            if p > 0:
                lo = math.ceil(n * (p - delta) - 1e-9)
                hi = math.floor(n * (p + delta) + 1e-9)
                boxes[a, b] = (max(0, lo), min(n, hi))
            else:
                boxes[a, b] = (0, 0)
    return boxes


def _multinomial_box_prob(n_a: int, p: np.ndarray, boxes: np.ndarray) -> float:
    """P(Multinomial(n_a, p) lands inside all per-symbol count boxes.

    Conditional-binomial chain over the symbols; exact up to float rounding.
    """
    if n_a == 0:
        return 1.0 if all(lo == 0 for lo, _ in boxes) else 0.0
    f = np.zeros(n_a + 1)
    f[0] = 1.0
    remaining = 1.0
    counts = np.arange(n_a + 1)
    log_fact = gammaln(counts + 1.0)
    for b in range(p.size):
        pb = p[b]
        lo, hi = int(boxes[b, 0]), int(boxes[b, 1])
        if remaining <= 0:
            if lo > 0:
                return 0.0
            continue
        r = min(1.0, pb / remaining)
        g = np.zeros(n_a + 1)
        if r <= 0:
            if lo > 0:
                return 0.0
            g = f
        elif r >= 1.0:
            # all remaining letters take symbol b
            for used in range(n_a + 1):
                c = n_a - used
                if lo <= c <= hi:
                    g[n_a] += f[used]
            f = g
            remaining -= pb
            continue
        else:
            log_r, log_1r = math.log(r), math.log1p(-r)
            for used in range(n_a + 1):
                if f[used] == 0.0:
                    continue
                m = n_a - used
                c_lo, c_hi = max(0, lo), min(m, hi)
                if c_lo > c_hi:
                    continue
                c = counts[c_lo:c_hi + 1]
                logpmf = (
                    log_fact[m] - log_fact[c] - log_fact[m - c]
                    + c * log_r + (m - c) * log_1r
                )
                g[used + c_lo:used + c_hi + 1] += f[used] * np.exp(logpmf)
        f = g
        remaining -= pb
    return float(f[n_a])


def covering_monte_carlo(
    p_sx, rate: float, n: int, delta: float, trials: int, seed: int
) -> CoveringEstimate:
    """Estimate the probability that none of 2^(ceil(n*rate)) i.i.d. codewords
    X^n ~ p_X^n is jointly typical with S^n ~ q^n.

    Per trial the parameter sequence is sampled, the conditional failure
    probability (1 - mu)^(#codewords) is evaluated exactly from the joint-type
    boxes, and the failure indicator is drawn from it, so estimates match a
    literal codebook simulation in distribution at any blocklength.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if trials < 1:
        raise ValueError("need at least one trial")
    p_sx = np.asarray(p_sx, dtype=float)
    q = p_sx.sum(axis=1)
    p_x = p_sx.sum(axis=0)
    boxes = _count_boxes(p_sx, n, delta)
    log_codewords = math.ceil(n * rate)
    rng = np.random.default_rng(np.random.SeedSequence((0x434F5645, seed)))
    memo: dict[tuple[int, ...], float] = {}
    fails = 0
    for _ in range(trials):
        counts = tuple(int(c) for c in rng.multinomial(n, q))
        pf = memo.get(counts)
        if pf is None:
            mu = 1.0
            for a, n_a in enumerate(counts):
                mu *= _multinomial_box_prob(n_a, p_x, boxes[a])
                if mu == 0.0:
                    break
            if mu <= 0.0:
                pf = 1.0
            elif mu >= 1.0:
                pf = 0.0
            else:
                with np.errstate(over="ignore"):
                    k = np.float64(2.0) ** log_codewords  # inf beyond 2^1024 is fine
                pf = float(np.exp(k * math.log1p(-mu)))
            memo[counts] = pf
        if rng.random() < pf:
            fails += 1
    p_hat = fails / trials
    stderr = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / trials)
    return CoveringEstimate(fail_prob_hat=p_hat, stderr=stderr, trials=trials)
