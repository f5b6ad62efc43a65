"""Capacity objectives for the five CSI scenarios and their maximization.

Factor convention: in every bipartite pure input the channel input is the
LAST tensor factor. For the non-causal scenarios the first factor is the
auxiliary that the per-parameter encoder transforms and keeps; for the others
it is an untouched reference.

The public objective_* functions are straightforward numpy implementations;
``maximize`` runs multi-start finite-difference ascent through the fused
kernels in :mod:`rpcap.kernels` (the two paths are asserted against each
other in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .quantum import (
    CqState,
    KrausChannel,
    apply_channel,
    holevo_info,
    max_entangled,
    mutual_info,
)
from .qcore import partial_trace
from .rpchannel import EncoderFamily, RandomParameterChannel, virtual_channel

__all__ = [
    "SCENARIOS",
    "CapacityEstimate",
    "NoncausalObjective",
    "OptimizerConfig",
    "maximize",
    "objective_both",
    "objective_causal",
    "objective_decoder",
    "objective_no_csi",
    "objective_noncausal",
    "quantum_capacity_from_classical",
]

SCENARIOS = ("none", "causal", "noncausal", "decoder", "both")


def objective_no_csi(phi, ch: KrausChannel) -> float:
    """I(A;B) of (1 (x) ch)(|phi><phi|) for phi on ref (x) input."""
    phi = np.asarray(phi, dtype=np.complex128).ravel()
    if phi.size % ch.dim_in != 0:
        raise ValueError(f"state dim {phi.size} not divisible by channel input {ch.dim_in}")
    d_ref = phi.size // ch.dim_in
    rho = np.outer(phi, phi.conj())
    out = apply_channel(ch, rho, [d_ref, ch.dim_in], target=1)
    return mutual_info(out, d_ref, ch.dim_out)


def objective_causal(theta, fam: EncoderFamily, rp: RandomParameterChannel) -> float:
    """I(ref; B') where B' runs through N^(s) o F^(s), averaged over q(s).

    Equals objective_no_csi(theta, virtual_channel(rp, fam)); both paths exist
    as a cross-check.
    """
    theta = np.asarray(theta, dtype=np.complex128).ravel()
    if fam.dim_a != rp.dim_in:
        raise ValueError(f"family output {fam.dim_a} != channel input {rp.dim_in}")
    if theta.size % fam.dim_k != 0:
        raise ValueError(f"state dim {theta.size} not divisible by dim_k {fam.dim_k}")
    d_ref = theta.size // fam.dim_k
    rho = np.outer(theta, theta.conj())
    out = np.zeros((d_ref * rp.dim_out,) * 2, dtype=np.complex128)
    for q, br, f in zip(rp.probs, rp.branches, fam.maps):
        if q <= 0:
            continue
        enc = apply_channel(f, rho, [d_ref, fam.dim_k], target=1)
        out += q * apply_channel(br, enc, [d_ref, rp.dim_in], target=1)
    return mutual_info(out, d_ref, rp.dim_out)


@dataclass(frozen=True)
class NoncausalObjective:
    i_ab: float
    i_as: float
    value: float


def objective_noncausal(
    theta,
    fam: EncoderFamily,
    rp: RandomParameterChannel,
    require_isometric: bool = True,
) -> NoncausalObjective:
    """I(A;B) - I(A;S) with A = F^(s)(K) retained and B = N^(s) acting on the
    other half of theta.

    The value may be negative away from the optimum; at the optimum it is
    nonnegative since parameter-independent families are feasible.
    """
    theta = np.asarray(theta, dtype=np.complex128).ravel()
    if require_isometric and not fam.isometric:
        raise ValueError("non-causal objective restricted to isometric families")
    if theta.size % fam.dim_k != 0:
        raise ValueError(f"state dim {theta.size} not divisible by dim_k {fam.dim_k}")
    d_ap = theta.size // fam.dim_k
    if d_ap != rp.dim_in:
        raise ValueError(f"channel-input factor {d_ap} != channel input {rp.dim_in}")
    rho = np.outer(theta, theta.conj())
    d_aux = fam.dim_a
    omega_ab = np.zeros((d_aux * rp.dim_out,) * 2, dtype=np.complex128)
    a_blocks = []
    for q, br, f in zip(rp.probs, rp.branches, fam.maps):
        omega_s = apply_channel(f, rho, [fam.dim_k, d_ap], target=0)
        omega_ab += q * apply_channel(br, omega_s, [d_aux, d_ap], target=1)
        a_blocks.append(partial_trace(omega_s, [d_aux, d_ap], [0]))
    i_ab = mutual_info(omega_ab, d_aux, rp.dim_out)
    i_as = holevo_info(CqState(rp.param_labels, rp.probs, tuple(a_blocks)))
    return NoncausalObjective(i_ab=i_ab, i_as=i_as, value=i_ab - i_as)


def objective_decoder(phi, rp: RandomParameterChannel) -> float:
    """I(A;B|S): the q(s)-average of the per-branch mutual informations."""
    phi = np.asarray(phi, dtype=np.complex128).ravel()
    if phi.size % rp.dim_in != 0:
        raise ValueError(f"state dim {phi.size} not divisible by channel input {rp.dim_in}")
    d_ref = phi.size // rp.dim_in
    rho = np.outer(phi, phi.conj())
    val = 0.0
    for q, br in zip(rp.probs, rp.branches):
        if q <= 0:
            continue
        out = apply_channel(br, rho, [d_ref, rp.dim_in], target=1)
        val += q * mutual_info(out, d_ref, rp.dim_out)
    return val


def objective_both(theta, fam: EncoderFamily, rp: RandomParameterChannel) -> float:
    """I(A;B|S) for the non-causal state construction; always at least the
    non-causal difference on the same inputs."""
    theta = np.asarray(theta, dtype=np.complex128).ravel()
    d_ap = theta.size // fam.dim_k
    if d_ap != rp.dim_in:
        raise ValueError(f"channel-input factor {d_ap} != channel input {rp.dim_in}")
    rho = np.outer(theta, theta.conj())
    d_aux = fam.dim_a
    val = 0.0
    for q, br, f in zip(rp.probs, rp.branches, fam.maps):
        if q <= 0:
            continue
        omega_s = apply_channel(f, rho, [fam.dim_k, d_ap], target=0)
        omega_s_ab = apply_channel(br, omega_s, [d_aux, d_ap], target=1)
        val += q * mutual_info(omega_s_ab, d_aux, rp.dim_out)
    return val


def quantum_capacity_from_classical(c: float) -> float:
    """Qubit rate from the classical rate: c / 2 (dense coding both ways)."""
    if c < 0:
        raise ValueError(f"classical rate must be nonnegative, got {c}")
    return 0.5 * c


# ---------------------------------------------------------------------------
# multi-start maximization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    dim_k: int | None = None      # defaults to the channel input dimension
    dim_ref: int | None = None    # defaults to dim_k
    restarts: int = 16
    max_iters: int = 300
    step_init: float = 0.1
    tol: float = 1e-7
    seed: int = 0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1 or self.step_init <= 0 or self.tol <= 0:
            raise ValueError("max_iters, step_init and tol must be positive")


@dataclass(frozen=True)
class CapacityEstimate:
    scenario: str
    value_bits: float
    best_state: np.ndarray
    best_family: EncoderFamily | None
    restart_values: list[float]
    converged: bool
    seed: int
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def cvec(v):
            return [[float(x.real), float(x.imag)] for x in np.asarray(v).ravel()]

        out = {
            "scenario": self.scenario,
            "value_bits": float(self.value_bits),
            "restart_values": [float(v) for v in self.restart_values],
            "converged": bool(self.converged),
            "seed": int(self.seed),
            "best_state": cvec(self.best_state),
        }
        if self.best_family is not None:
            out["best_family"] = [
                [cvec(row) for row in f.kraus_ops[0]] for f in self.best_family.maps
            ]
        out.update({k: v for k, v in self.diagnostics.items()})
        return out


def _ascend(f, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, float, bool]:
    """Adaptive-step gradient ascent with central finite differences."""
    x = x0.copy()
    fx = f(x)
    lr = cfg.step_init
    h = cfg.fd_step
    window: list[float] = [fx]
    converged = False
    grad = np.zeros_like(x)
    for it in range(cfg.max_iters):
        for i in range(x.size):
            xi = x[i]
            x[i] = xi + h
            fp = f(x)
            x[i] = xi - h
            fm = f(x)
            x[i] = xi
            grad[i] = (fp - fm) / (2 * h)
        gn = float(np.linalg.norm(grad))
        if gn < 1e-12:
            converged = True
            break
        step = grad / gn
        accepted = False
        for _ in range(40):
            cand = x + lr * step
            fc = f(cand)
            if fc > fx + 1e-14:
                x, fx = cand, fc
                lr *= 1.3
                accepted = True
                break
            lr *= 0.5
            if lr < 1e-12:
                break
        if not accepted:
            converged = True
            break
        window.append(fx)
        if len(window) > 25:
            if fx - window.pop(0) < cfg.tol:
                converged = True
                break
    return x, fx, converged


def _identity_like(d_out: int, d_in: int) -> np.ndarray:
    m = np.zeros((d_out, d_in))
    for i in range(d_in):
        m[i, i] = 1.0
    return m


def _pack_complex(m: np.ndarray) -> np.ndarray:
    flat = np.asarray(m, dtype=np.complex128).ravel()
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def _scenario_setup(scenario: str, rp: RandomParameterChannel, cfg: OptimizerConfig):
    """Objective closure over raw parameters, canonical start, and decoder of
    the best parameter vector into (state, family)."""
    stack, nks = kernels.kraus_stack(rp.branches)
    q = np.asarray(rp.probs, dtype=float)
    d_in, d_out = rp.dim_in, rp.dim_out
    d_k = cfg.dim_k or d_in
    d_ref = cfg.dim_ref or d_k
    num_s = rp.num_params

    if scenario in ("none", "decoder"):
        n_par = 2 * d_ref * d_in
        canonical = _pack_complex(
            max_entangled(d_in) if d_ref == d_in else np.ones(d_ref * d_in)
        )
        if scenario == "none":
            avg_stack, avg_nks = kernels.kraus_stack([_average(rp)])

            def f(p):
                return float(kernels.value_no_csi(p, d_ref, avg_stack[0], int(avg_nks[0])))
        else:
            def f(p):
                return float(kernels.value_decoder(p, d_ref, stack, nks, q))

        def decode(p):
            return kernels._unit_vector(p), None

        return f, canonical, n_par, decode

    if scenario == "causal":
        if d_k > d_in:
            raise ValueError(f"causal isometries need dim_k <= channel input ({d_k} > {d_in})")
        n_theta = 2 * d_ref * d_k
        fam_len = 2 * d_in * d_k
        n_par = n_theta + num_s * fam_len
        canonical = np.concatenate(
            [_pack_complex(max_entangled(d_k) if d_ref == d_k else np.ones(d_ref * d_k))]
            + [_pack_complex(_identity_like(d_in, d_k))] * num_s
        )

        def f(p):
            return float(kernels.value_causal(p, d_ref, d_k, stack, nks, q))

        def decode(p):
            theta = kernels._unit_vector(p[:n_theta])
            mats = [
                kernels._isometry(p[n_theta + s * fam_len:n_theta + (s + 1) * fam_len], d_in, d_k)
                for s in range(num_s)
            ]
            return theta, EncoderFamily.from_matrices(mats)

        return f, canonical, n_par, decode

    if scenario in ("noncausal", "both"):
        d_aux = d_k
        n_theta = 2 * d_k * d_in
        fam_len = 2 * d_aux * d_k
        n_par = n_theta + num_s * fam_len
        canonical = np.concatenate(
            [_pack_complex(max_entangled(d_k) if d_k == d_in else np.ones(d_k * d_in))]
            + [_pack_complex(np.eye(d_k))] * num_s
        )
        if scenario == "noncausal":
            def f(p):
                return float(kernels.value_noncausal(p, d_k, stack, nks, q)[2])
        else:
            def f(p):
                return float(kernels.value_both(p, d_k, stack, nks, q))

        def decode(p):
            theta = kernels._unit_vector(p[:n_theta])
            mats = [
                kernels._isometry(p[n_theta + s * fam_len:n_theta + (s + 1) * fam_len], d_aux, d_k)
                for s in range(num_s)
            ]
            return theta, EncoderFamily.from_matrices(mats)

        return f, canonical, n_par, decode

    raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def _average(rp: RandomParameterChannel) -> KrausChannel:
    from .rpchannel import average_channel

    return average_channel(rp)


def maximize(scenario: str, rp: RandomParameterChannel, cfg: OptimizerConfig) -> CapacityEstimate:
    """Multi-start local search; the result is a lower bound on the true
    maximum. Restart 0 starts from the canonical point (maximally entangled
    state, identity-like family); later restarts are seeded random.
    Deterministic for a fixed seed, ties broken toward lower restart index.
    """
    f, canonical, n_par, decode = _scenario_setup(scenario, rp, cfg)
    values: list[float] = []
    best_idx = -1
    best_val = -np.inf
    best_x = canonical
    best_conv = False
    for r in range(cfg.restarts):
        if r == 0:
            x0 = canonical.copy()
        else:
            rng = np.random.default_rng(np.random.SeedSequence((0x4F505449, cfg.seed, r)))
            x0 = rng.normal(size=n_par)
        x, fx, conv = _ascend(f, x0, cfg)
        values.append(fx)
        if fx > best_val + 1e-9:
            best_idx, best_val, best_x, best_conv = r, fx, x, conv
    theta, fam = decode(best_x)
    return CapacityEstimate(
        scenario=scenario,
        value_bits=float(best_val),
        best_state=theta,
        best_family=fam,
        restart_values=values,
        converged=best_conv,
        seed=cfg.seed,
        diagnostics={"best_restart": best_idx},
    )
