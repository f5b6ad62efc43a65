"""Hot numeric kernels for the capacity optimizer.

The multi-start searches evaluate the capacity objectives ~1e5 times per
channel through finite-difference gradients, so the full pipeline (parameter
retraction, channel application, eigendecompositions, entropies) is fused
here into numba @njit kernels. The same source also runs as plain numpy:
set RPCAP_NO_NUMBA=1 to disable jitting (or it disables itself when numba is
unavailable). benchmarks/bench_kernels.py times the two modes against each
other.

Array conventions: parameter vectors are float64 1-D (interleaved re/im),
Kraus stacks are (num_branches, max_ops, d_out, d_in) complex128 with a
per-branch operator count, zero-padded.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("RPCAP_NO_NUMBA", "").lower() not in ("1", "true", "yes")
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

_ENTROPY_CLIP = 1e-12


@njit(cache=True)
def _entropy_bits(h):
    hs = 0.5 * (h + np.ascontiguousarray(h.conj().T))
    w = np.linalg.eigvalsh(hs)
    s = 0.0
    for i in range(w.shape[0]):
        if w[i] > _ENTROPY_CLIP:
            s -= w[i] * np.log2(w[i])
    return s


@njit(cache=True)
def _ptrace_first(rho, da, db):
    out = np.zeros((db, db), dtype=np.complex128)
    for i in range(da):
        base = i * db
        for j in range(db):
            for l in range(db):
                out[j, l] += rho[base + j, base + l]
    return out


@njit(cache=True)
def _ptrace_second(rho, da, db):
    out = np.zeros((da, da), dtype=np.complex128)
    for i in range(da):
        for k in range(da):
            acc = 0.0 + 0.0j
            for j in range(db):
                acc += rho[i * db + j, k * db + j]
            out[i, k] = acc
    return out


@njit(cache=True)
def _mutual_info(rho, da, db):
    return (
        _entropy_bits(_ptrace_second(rho, da, db))
        + _entropy_bits(_ptrace_first(rho, da, db))
        - _entropy_bits(rho)
    )


@njit(cache=True)
def _apply_kraus_second(rho, da, kraus, nk):
    """Channel on the second factor of a bipartite density matrix."""
    dout = kraus.shape[1]
    din = kraus.shape[2]
    out = np.zeros((da * dout, da * dout), dtype=np.complex128)
    for j in range(nk):
        k_op = np.ascontiguousarray(kraus[j])
        k_dag = np.ascontiguousarray(k_op.conj().T)
        for i in range(da):
            for k in range(da):
                blk = np.ascontiguousarray(rho[i * din:(i + 1) * din, k * din:(k + 1) * din])
                out[i * dout:(i + 1) * dout, k * dout:(k + 1) * dout] += k_op @ blk @ k_dag
    return out


@njit(cache=True)
def _apply_single_first(rho, db, f):
    """(F (x) 1) rho (F (x) 1)^dag for one operator F on the first factor."""
    dout = f.shape[0]
    din = f.shape[1]
    out = np.zeros((dout * db, dout * db), dtype=np.complex128)
    fc = np.conj(f)
    for a in range(dout):
        for ap in range(din):
            if f[a, ap] == 0:
                continue
            for b in range(dout):
                for bp in range(din):
                    coeff = f[a, ap] * fc[b, bp]
                    if coeff == 0:
                        continue
                    out[a * db:(a + 1) * db, b * db:(b + 1) * db] += coeff * rho[
                        ap * db:(ap + 1) * db, bp * db:(bp + 1) * db
                    ]
    return out


@njit(cache=True)
def _unit_vector(params):
    """Interleaved re/im parameters -> normalized complex vector."""
    d = params.shape[0] // 2
    v = np.empty(d, dtype=np.complex128)
    nrm = 0.0
    for i in range(d):
        v[i] = complex(params[2 * i], params[2 * i + 1])
        nrm += params[2 * i] ** 2 + params[2 * i + 1] ** 2
    nrm = np.sqrt(nrm)
    if nrm < 1e-300:
        v[0] = 1.0
        return v
    return v / nrm


@njit(cache=True)
def _isometry(params, dout, din):
    """Interleaved re/im parameters -> isometry via sign-fixed reduced QR."""
    g = np.empty((dout, din), dtype=np.complex128)
    for a in range(dout):
        for b in range(din):
            idx = 2 * (a * din + b)
            g[a, b] = complex(params[idx], params[idx + 1])
    q, r = np.linalg.qr(g)
    for b in range(din):
        piv = r[b, b]
        mag = np.abs(piv)
        if mag > 1e-12:
            q[:, b] = q[:, b] * (np.conj(piv) / mag)
    return np.ascontiguousarray(q)


@njit(cache=True)
def value_no_csi(params, d_ref, kraus, nk):
    """I(ref; out) for a pure input on ref (x) in pushed through one channel."""
    theta = _unit_vector(params)
    rho = np.outer(theta, np.conj(theta))
    out = _apply_kraus_second(rho, d_ref, kraus, nk)
    return _mutual_info(out, d_ref, kraus.shape[1])


@njit(cache=True)
def value_decoder(params, d_ref, kraus_stack, nks, q):
    """sum_s q(s) I(ref; B)_s: conditional mutual information with the
    parameter known at the decoder."""
    theta = _unit_vector(params)
    rho = np.outer(theta, np.conj(theta))
    val = 0.0
    for s in range(q.shape[0]):
        if q[s] <= 0:
            continue
        out = _apply_kraus_second(rho, d_ref, kraus_stack[s], nks[s])
        val += q[s] * _mutual_info(out, d_ref, kraus_stack.shape[2])
    return val


@njit(cache=True)
def value_causal(params, d_ref, d_k, kraus_stack, nks, q):
    """I(ref; B') through the virtual channel sum_s q(s) N^(s) o F^(s)."""
    d_in = kraus_stack.shape[3]
    d_out = kraus_stack.shape[2]
    n_theta = 2 * d_ref * d_k
    theta = _unit_vector(params[:n_theta])
    rho = np.outer(theta, np.conj(theta))
    num_s = q.shape[0]
    fam_len = 2 * d_in * d_k
    total = 0
    for s in range(num_s):
        total += nks[s]
    composed = np.zeros((total, d_out, d_k), dtype=np.complex128)
    pos = 0
    for s in range(num_s):
        f_s = _isometry(params[n_theta + s * fam_len:n_theta + (s + 1) * fam_len], d_in, d_k)
        root_q = np.sqrt(q[s])
        for j in range(nks[s]):
            composed[pos] = root_q * (np.ascontiguousarray(kraus_stack[s, j]) @ f_s)
            pos += 1
    out = _apply_kraus_second(rho, d_ref, composed, total)
    return _mutual_info(out, d_ref, d_out)


@njit(cache=True)
def value_noncausal(params, d_k, kraus_stack, nks, q):
    """(I(A;B), I(A;S), difference) with the auxiliary A = F^(s)(K) retained
    and the channel eating the other half."""
    d_in = kraus_stack.shape[3]
    d_out = kraus_stack.shape[2]
    d_aux = d_k
    n_theta = 2 * d_k * d_in
    theta = _unit_vector(params[:n_theta])
    rho = np.outer(theta, np.conj(theta))
    num_s = q.shape[0]
    fam_len = 2 * d_aux * d_k
    omega_ab = np.zeros((d_aux * d_out, d_aux * d_out), dtype=np.complex128)
    mix_a = np.zeros((d_aux, d_aux), dtype=np.complex128)
    hol = 0.0
    for s in range(num_s):
        if q[s] <= 0:
            continue
        f_s = _isometry(params[n_theta + s * fam_len:n_theta + (s + 1) * fam_len], d_aux, d_k)
        omega_s = _apply_single_first(rho, d_in, f_s)
        omega_s_ab = _apply_kraus_second(omega_s, d_aux, kraus_stack[s], nks[s])
        omega_ab += q[s] * omega_s_ab
        a_marg = _ptrace_second(omega_s, d_aux, d_in)
        mix_a += q[s] * a_marg
        hol += q[s] * _entropy_bits(a_marg)
    i_ab = _mutual_info(omega_ab, d_aux, d_out)
    i_as = _entropy_bits(mix_a) - hol
    return i_ab, i_as, i_ab - i_as


@njit(cache=True)
def value_both(params, d_k, kraus_stack, nks, q):
    """sum_s q(s) I(A;B)_s for the non-causal state construction."""
    d_in = kraus_stack.shape[3]
    d_out = kraus_stack.shape[2]
    d_aux = d_k
    n_theta = 2 * d_k * d_in
    theta = _unit_vector(params[:n_theta])
    rho = np.outer(theta, np.conj(theta))
    num_s = q.shape[0]
    fam_len = 2 * d_aux * d_k
    val = 0.0
    for s in range(num_s):
        if q[s] <= 0:
            continue
        f_s = _isometry(params[n_theta + s * fam_len:n_theta + (s + 1) * fam_len], d_aux, d_k)
        omega_s = _apply_single_first(rho, d_in, f_s)
        omega_s_ab = _apply_kraus_second(omega_s, d_aux, kraus_stack[s], nks[s])
        val += q[s] * _mutual_info(omega_s_ab, d_aux, d_out)
    return val


def kraus_stack(branches) -> tuple[np.ndarray, np.ndarray]:
    """Pad per-branch Kraus lists into one (S, max_ops, d_out, d_in) array."""
    nks = np.array([len(b.kraus_ops) for b in branches], dtype=np.int64)
    d_out, d_in = branches[0].kraus_ops[0].shape
    stack = np.zeros((len(branches), int(nks.max()), d_out, d_in), dtype=np.complex128)
    for s, b in enumerate(branches):
        for j, k in enumerate(b.kraus_ops):
            stack[s, j] = k
    return stack, nks


def warmup() -> None:
    """Trigger jit compilation on tiny inputs so timing stays out of runs."""
    k = np.zeros((1, 1, 2, 2), dtype=np.complex128)
    k[0, 0] = np.eye(2)
    nks = np.array([1], dtype=np.int64)
    q = np.array([1.0])
    p_state = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    value_no_csi(p_state, 2, k[0], 1)
    value_decoder(p_state, 2, k, nks, q)
    p_fam = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    value_causal(np.concatenate([p_state, p_fam]), 2, 2, k, nks, q)
    value_noncausal(np.concatenate([p_state, p_fam]), 2, k, nks, q)
    value_both(np.concatenate([p_state, p_fam]), 2, k, nks, q)
