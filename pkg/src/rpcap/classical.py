"""Classical baselines: state-dependent DMC capacities with causal and
non-causal side information.

Causal: maximize I(T;Y) over distributions on strategies t: S -> X, with the
strategy channel p(y|t) = sum_s q(s) w(y|t(s), s), by Blahut-Arimoto.
Non-causal: maximize I(U;Y) - I(U;S) over p(u|s) and deterministic maps
x = f(u,s), by exhaustive f, simplex grid and local refinement.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "ClassicalChannelWithState",
    "binary_entropy",
    "blahut_arimoto",
    "gelfand_pinsker_capacity",
    "load_classical_spec",
    "shannon_strategy_capacity",
]

STRATEGY_CAP = 4096


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class ClassicalChannelWithState:
    """w[y, x, s] = p(y | x, s) together with the state pmf q[s]."""

    w: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "q", q)
        if w.ndim != 3:
            raise ValueError(f"w must be (Y, X, S), got shape {w.shape}")
        if q.ndim != 1 or q.size != w.shape[2]:
            raise ValueError("q length must match the state axis of w")
        col = w.sum(axis=0)
        if np.abs(col - 1.0).max() > 1e-12:
            bad = np.unravel_index(np.abs(col - 1.0).argmax(), col.shape)
            raise ValueError(
                f"w(.|x={bad[0]},s={bad[1]}) sums to {col[bad]:.12g}, not 1"
            )
        if abs(q.sum() - 1.0) > 1e-9:
            raise ValueError(f"q sums to {q.sum():.12g}, not 1")

    @property
    def y_size(self) -> int:
        return self.w.shape[0]

    @property
    def x_size(self) -> int:
        return self.w.shape[1]

    @property
    def s_size(self) -> int:
        return self.w.shape[2]


def load_classical_spec(path) -> ClassicalChannelWithState:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "w" not in doc or "q" not in doc:
        raise ValueError("classical spec needs keys 'w' (p[y][x][s]) and 'q'")
    return ClassicalChannelWithState(np.array(doc["w"], dtype=float), np.array(doc["q"], dtype=float))


def _xlog2x(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    mask = p > 1e-300
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def blahut_arimoto(w_yx: np.ndarray, tol: float = 1e-9, max_iter: int = 20000) -> tuple[float, np.ndarray]:
    """Capacity of a DMC p(y|x) given as w_yx[y, x]; returns (bits, argmax pmf)."""
    w = np.asarray(w_yx, dtype=float)
    y_size, x_size = w.shape
    r = np.full(x_size, 1.0 / x_size)
    log_w = np.where(w > 0, np.log2(np.maximum(w, 1e-300)), 0.0)
    prev = -np.inf
    for _ in range(max_iter):
        p_y = w @ r
        # D(w(.|x) || p_y) in bits, with 0 log 0 = 0
        d = (w * (log_w - np.log2(np.maximum(p_y, 1e-300))[:, None])).sum(axis=0)
        cap_lo = float((r * d).sum())
        if cap_lo - prev < tol and cap_lo - prev > -1e-12:
            return cap_lo, r
        prev = cap_lo
        r = r * np.exp2(d - d.max())
        r /= r.sum()
    return prev, r


def shannon_strategy_capacity(ch: ClassicalChannelWithState, tol: float = 1e-9) -> float:
    """Causal-CSI capacity over strategy letters t: S -> X."""
    num_strategies = ch.x_size ** ch.s_size
    if num_strategies > STRATEGY_CAP:
        raise ValueError(
            f"strategy alphabet {num_strategies} exceeds cap {STRATEGY_CAP}"
        )
    w_t = np.empty((ch.y_size, num_strategies))
    for i, t in enumerate(itertools.product(range(ch.x_size), repeat=ch.s_size)):
        w_t[:, i] = sum(ch.q[s] * ch.w[:, t[s], s] for s in range(ch.s_size))
    cap, _ = blahut_arimoto(w_t, tol=tol)
    return cap


def _gp_values(p_us: np.ndarray, w_f: np.ndarray, q: np.ndarray) -> np.ndarray:
    """I(U;Y) - I(U;S) for a batch of conditionals p_us[g, s, u].

    w_f[y, u, s] is the effective channel for one deterministic map f.
    """
    p_su = q[None, :, None] * p_us                      # (g, s, u)
    p_uy = np.einsum("gsu,yus->guy", p_su, w_f)         # (g, u, y)
    p_u = p_su.sum(axis=1)
    p_y = p_uy.sum(axis=1)
    h_y = -_xlog2x(p_y).sum(axis=1)
    h_uy = -_xlog2x(p_uy).sum(axis=(1, 2))
    h_s = -_xlog2x(q).sum()
    h_su = -_xlog2x(p_su).sum(axis=(1, 2))
    # I(U;Y) - I(U;S) = [H(Y) - H(UY)] - [H(S) - H(SU)]  (+H(U) cancels)
    return (h_y - h_uy) - (h_s - h_su)


def _simplex_grid(dim: int, step: float) -> np.ndarray:
    k = round(1.0 / step)
    pts = [
        np.array(c, dtype=float) / k
        for c in itertools.product(range(k + 1), repeat=dim)
        if sum(c) == k
    ]
    return np.stack(pts)


def gelfand_pinsker_capacity(
    ch: ClassicalChannelWithState,
    u_size: int,
    grid_step: float = 0.05,
    refine: bool = True,
    map_cap: int = 4096,
) -> float:
    """Lower bound on max [I(U;Y) - I(U;S)] at the given auxiliary alphabet
    size, restricting x = f(u,s) to deterministic maps."""
    if u_size < 1:
        raise ValueError("u_size must be >= 1")
    num_maps = ch.x_size ** (u_size * ch.s_size)
    if num_maps > map_cap:
        raise ValueError(f"{num_maps} deterministic maps exceed cap {map_cap}")
    simplex = _simplex_grid(u_size, grid_step)            # (P, U)
    combos = np.stack(
        [np.stack(c) for c in itertools.product(simplex, repeat=ch.s_size)]
    )                                                     # (G, S, U)
    best = -np.inf
    best_args = None
    for f_flat in itertools.product(range(ch.x_size), repeat=u_size * ch.s_size):
        f = np.array(f_flat).reshape(u_size, ch.s_size)
        w_f = ch.w[:, f, np.arange(ch.s_size)[None, :]]    # (Y, U, S)
        vals = _gp_values(combos, w_f, ch.q)
        g = int(vals.argmax())
        if vals[g] > best:
            best = float(vals[g])
            best_args = (w_f, combos[g])
    if refine and best_args is not None:
        w_f, p0 = best_args
        logits0 = np.log(np.maximum(p0, 1e-6)).ravel()

        def neg(logits):
            z = logits.reshape(ch.s_size, u_size)
            p = np.exp(z - z.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            return -float(_gp_values(p[None], w_f, ch.q)[0])

        res = minimize(neg, logits0, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def gelfand_pinsker_grid_oracle(
    ch: ClassicalChannelWithState, u_size: int, grid_step: float
) -> float:
    """Plain exhaustive grid search with no refinement, kept separate as the
    independent oracle for the solver above."""
    return gelfand_pinsker_capacity(ch, u_size, grid_step=grid_step, refine=False)
