"""Random-parameter quantum channels N_{SA->B}.

The parameter is classical: an alphabet of labels with a pmf q(s) and one
Kraus channel per label. Also holds the per-parameter encoder families and
the JSON channel-spec file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .quantum import Isometry, KrausChannel, identity_channel, unitary_channel

__all__ = [
    "EncoderFamily",
    "RandomParameterChannel",
    "SpecError",
    "average_channel",
    "dephasing_parameter_channel",
    "depolarizing_parameter_channel",
    "identity_parameter_channel",
    "load_spec",
    "projected",
    "random_two_branch_qubit_channel",
    "save_spec",
    "stuck_at_channel",
    "virtual_channel",
]


class SpecError(ValueError):
    """Channel spec file failed to parse or validate."""


@dataclass(frozen=True)
class RandomParameterChannel:
    name: str
    param_labels: tuple
    probs: np.ndarray
    branches: tuple[KrausChannel, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "param_labels", tuple(self.param_labels))
        object.__setattr__(self, "branches", tuple(self.branches))
        if abs(p.sum() - 1.0) > 1e-9:
            raise SpecError(f"parameter probabilities sum to {p.sum():.12g}, not 1")
        if np.any(p < -1e-12):
            raise SpecError("negative parameter probability")
        if len(self.param_labels) != len(p) or len(self.branches) != len(p):
            raise SpecError("labels, probs and branches must have equal length")
        dims = {(b.dim_in, b.dim_out) for b in self.branches}
        if len(dims) > 1:
            raise SpecError(f"branches have mixed dimensions {dims}")

    @property
    def dim_in(self) -> int:
        return self.branches[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.branches[0].dim_out

    @property
    def num_params(self) -> int:
        return len(self.param_labels)


@dataclass(frozen=True)
class EncoderFamily:
    """One encoding map per parameter value, all sharing dim_k -> dim_a."""

    dim_k: int
    dim_a: int
    maps: tuple[KrausChannel, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        for f in self.maps:
            if (f.dim_in, f.dim_out) != (self.dim_k, self.dim_a):
                raise ValueError(
                    f"family map dims ({f.dim_in},{f.dim_out}) != ({self.dim_k},{self.dim_a})"
                )

    @property
    def isometric(self) -> bool:
        """True when every map is a single-Kraus isometry."""
        for f in self.maps:
            if len(f.kraus_ops) != 1:
                return False
            v = f.kraus_ops[0]
            if np.abs(v.conj().T @ v - np.eye(self.dim_k)).max() > 1e-9:
                return False
        return True

    def isometries(self) -> tuple[Isometry, ...]:
        if not self.isometric:
            raise ValueError("family is not isometric")
        return tuple(Isometry(self.dim_k, self.dim_a, f.kraus_ops[0]) for f in self.maps)

    @classmethod
    def from_matrices(cls, mats) -> "EncoderFamily":
        mats = [np.asarray(m, dtype=np.complex128) for m in mats]
        d_a, d_k = mats[0].shape
        return cls(d_k, d_a, tuple(KrausChannel(d_k, d_a, (m,)) for m in mats))

    @classmethod
    def identity(cls, d: int, num_params: int) -> "EncoderFamily":
        return cls(d, d, tuple(identity_channel(d) for _ in range(num_params)))


def projected(rp: RandomParameterChannel, s) -> KrausChannel:
    """The branch N^{(s)} for a parameter label."""
    try:
        idx = rp.param_labels.index(s)
    except ValueError:
        raise KeyError(f"unknown parameter label {s!r}") from None
    return rp.branches[idx]


def average_channel(rp: RandomParameterChannel) -> KrausChannel:
    """The channel seen without side information: sum_s q(s) N^{(s)}.

    Kraus set is the union over s of sqrt(q(s)) times each branch operator;
    redundant operators are kept.
    """
    ops = []
    for q, br in zip(rp.probs, rp.branches):
        if q <= 0:
            continue
        ops.extend(np.sqrt(q) * k for k in br.kraus_ops)
    return KrausChannel(rp.dim_in, rp.dim_out, tuple(ops))


def virtual_channel(rp: RandomParameterChannel, fam: EncoderFamily) -> KrausChannel:
    """The effective channel M(rho) = sum_s q(s) N^{(s)}(F^{(s)}(rho)) induced
    by a causal encoder family."""
    if fam.dim_a != rp.dim_in:
        raise ValueError(f"family output dim {fam.dim_a} != channel input {rp.dim_in}")
    if len(fam.maps) != rp.num_params:
        raise ValueError("family must have one map per parameter value")
    ops = []
    for q, br, f in zip(rp.probs, rp.branches, fam.maps):
        if q <= 0:
            continue
        for n_j in br.kraus_ops:
            for f_k in f.kraus_ops:
                ops.append(np.sqrt(q) * (n_j @ f_k))
    return KrausChannel(fam.dim_k, rp.dim_out, tuple(ops))


# ---------------------------------------------------------------------------
# channel spec files
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _matrix_to_json(m: np.ndarray) -> str:
    rows = []
    for row in m:
        entries = ", ".join(f"[{_fmt(e.real)}, {_fmt(e.imag)}]" for e in row)
        rows.append(f"[{entries}]")
    return "[" + ", ".join(rows) + "]"


def spec_text(rp: RandomParameterChannel) -> str:
    """Canonical serialization: fixed key order, doubles with 17 significant
    digits, UTF-8."""
    parts = [
        f'{{"name": {json.dumps(rp.name)},',
        f' "dim_in": {rp.dim_in},',
        f' "dim_out": {rp.dim_out},',
        ' "params": [',
    ]
    blocks = []
    for label, q, br in zip(rp.param_labels, rp.probs, rp.branches):
        kraus = ", ".join(_matrix_to_json(k) for k in br.kraus_ops)
        blocks.append(
            f'{{"label": {json.dumps(str(label))}, "prob": {_fmt(q)}, "kraus": [{kraus}]}}'
        )
    parts.append(", ".join(blocks))
    parts.append("]}")
    return "".join(parts) + "\n"


def save_spec(rp: RandomParameterChannel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec_text(rp))


def _parse_matrix(raw, dim_out: int, dim_in: int, where: str) -> np.ndarray:
    try:
        m = np.array(
            [[complex(e[0], e[1]) for e in row] for row in raw], dtype=np.complex128
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise SpecError(f"{where}: malformed matrix entry ({exc})") from None
    if m.shape != (dim_out, dim_in):
        raise SpecError(f"{where}: matrix shape {m.shape} != ({dim_out}, {dim_in})")
    if not np.all(np.isfinite(m.view(float))):
        raise SpecError(f"{where}: non-finite entry")
    return m


def load_spec(path) -> RandomParameterChannel:
    """Load and validate a channel spec file, naming the failing quantity on
    any invariant violation."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"parse error: {exc}") from None
    for key in ("name", "dim_in", "dim_out", "params"):
        if key not in doc:
            raise SpecError(f"missing key {key!r}")
    dim_in, dim_out = int(doc["dim_in"]), int(doc["dim_out"])
    if dim_in < 1 or dim_out < 1:
        raise SpecError("dimensions must be positive")
    labels, probs, branches = [], [], []
    for i, entry in enumerate(doc["params"]):
        label = entry.get("label", str(i))
        where = f"branch s={label}"
        if "prob" not in entry or "kraus" not in entry:
            raise SpecError(f"{where}: missing prob or kraus")
        mats = [
            _parse_matrix(raw, dim_out, dim_in, where) for raw in entry["kraus"]
        ]
        if not mats:
            raise SpecError(f"{where}: empty Kraus set")
        acc = sum(k.conj().T @ k for k in mats)
        res = float(np.abs(acc - np.eye(dim_in)).max())
        if res > 1e-9:
            raise SpecError(f"{where} Kraus completeness residual {res:.3g}")
        labels.append(label)
        probs.append(float(entry["prob"]))
        branches.append(KrausChannel(dim_in, dim_out, tuple(mats)))
    total = sum(probs)
    if abs(total - 1.0) > 1e-9:
        raise SpecError(f"parameter probabilities sum to {total:.12g}, not 1")
    return RandomParameterChannel(str(doc["name"]), tuple(labels), np.array(probs), tuple(branches))


# ---------------------------------------------------------------------------
# stock channels
# ---------------------------------------------------------------------------

_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def identity_parameter_channel(d: int = 2) -> RandomParameterChannel:
    return RandomParameterChannel(
        "identity", ("0",), np.array([1.0]), (identity_channel(d),)
    )


def dephasing_parameter_channel(q: float = 0.5) -> RandomParameterChannel:
    """Branches {identity, conjugation by Z} with q(1) = q."""
    return RandomParameterChannel(
        "dephasing",
        ("0", "1"),
        np.array([1.0 - q, q]),
        (identity_channel(2), unitary_channel(_Z)),
    )


def stuck_at_channel(alpha: float) -> RandomParameterChannel:
    """Qubit memory with stuck-at faults: stuck at |0> or |1> with probability
    alpha/2 each, transparent otherwise."""
    from .quantum import replacer_channel

    e0 = np.array([1.0, 0.0], dtype=np.complex128)
    e1 = np.array([0.0, 1.0], dtype=np.complex128)
    return RandomParameterChannel(
        "stuck-at",
        ("0", "1", "2"),
        np.array([alpha / 2, alpha / 2, 1.0 - alpha]),
        (replacer_channel(e0), replacer_channel(e1), identity_channel(2)),
    )


def depolarizing_parameter_channel(d: int = 2) -> RandomParameterChannel:
    from .quantum import depolarizing_channel

    return RandomParameterChannel(
        "depolarizing", ("0",), np.array([1.0]), (depolarizing_channel(d),)
    )


def random_two_branch_qubit_channel(seed: int, n_kraus: int = 2) -> RandomParameterChannel:
    """Seeded random two-parameter qubit channel for property sweeps."""
    from .quantum import random_kraus_channel

    rng = np.random.default_rng(np.random.SeedSequence((0x52504348, seed)))
    q = float(rng.uniform(0.2, 0.8))
    b0 = random_kraus_channel(2, 2, n_kraus, rng)
    b1 = random_kraus_channel(2, 2, n_kraus, rng)
    return RandomParameterChannel(
        f"random-{seed}", ("0", "1"), np.array([q, 1.0 - q]), (b0, b1)
    )
