import itertools
import math

import numpy as np
import pytest

from rpcap import mtypes, protosim, qcore
from rpcap.mtypes import TypeVector, covering_monte_carlo, type_projector
from rpcap.protosim import (
    BlockLayout,
    GammaVector,
    binned_codebook,
    block_unitary,
    channel_apply_n,
    covering_select,
    encode_causal,
    encode_noncausal,
    gamma_codebook,
    grouped_pair_power,
    packing_conditions_check,
    schmidt_layout,
    simulate,
    sqrt_measurement,
    type_layout,
    u_of_gamma,
)
from rpcap.quantum import heisenberg_weyl, max_entangled, projector, vn_entropy
from rpcap.rpchannel import (
    EncoderFamily,
    dephasing_parameter_channel,
    identity_parameter_channel,
    stuck_at_channel,
    virtual_channel,
)

from conftest import PAULI_Z


def test_type_layout_structure():
    # ascending lexicographic on count vectors: (0,2), (1,1), (2,0)
    layout = type_layout(2, 2)
    assert layout.blocks == ((3,), (1, 2), (0,))


def test_schmidt_layout_merges_uniform():
    layout = schmidt_layout([0.5, 0.5], 3)
    assert len(layout.blocks) == 1
    assert layout.blocks[0] == tuple(range(8))


def test_schmidt_layout_generic_is_type_layout():
    generic = schmidt_layout([0.25, 0.75], 2)
    assert sorted(generic.blocks) == sorted(type_layout(2, 2).blocks)


def test_u_of_gamma_identity():
    g = GammaVector(((0, 0, 0), (0, 0, 0), (0, 0, 0)))
    assert np.allclose(u_of_gamma(g, 2, 2), np.eye(4))


def test_u_of_gamma_n1_signs():
    # first block is the type with counts (0,1), i.e. the sequence |1>
    g = GammaVector(((0, 0, 1), (0, 0, 0)))
    u = u_of_gamma(g, 1, 2)
    assert np.allclose(u, np.diag([1.0, -1.0]))


def test_u_of_gamma_middle_type_heisenberg_weyl():
    # type (1,1) spans {|01>, |10>}; block is the 2x2 shift/phase operator
    g = GammaVector(((0, 0, 0), (1, 1, 0), (0, 0, 0)))
    u = u_of_gamma(g, 2, 2)
    block = u[np.ix_([1, 2], [1, 2])]
    assert np.allclose(block, heisenberg_weyl(2, 1, 1))
    assert np.allclose(u[0, 0], 1.0) and np.allclose(u[3, 3], 1.0)


def test_u_of_gamma_unitary_and_commutes(rng):
    layout = type_layout(3, 2)
    for _ in range(10):
        g = GammaVector(
            tuple(
                (int(rng.integers(d)), int(rng.integers(d)), int(rng.integers(2)))
                for d in layout.block_sizes
            )
        )
        u = u_of_gamma(g, 3, 2)
        assert np.abs(u @ u.conj().T - np.eye(8)).max() <= 1e-10
        for t in mtypes.all_types(3, 2):
            p = type_projector(t, 2, 3).matrix
            assert np.abs(u @ p - p @ u).max() <= 1e-10


def test_u_of_gamma_layout_mismatch():
    with pytest.raises(ValueError):
        u_of_gamma(GammaVector(((0, 0, 0),)), 2, 2)


def test_gamma_codebook_distinct_and_deterministic():
    layout = schmidt_layout([0.5, 0.5], 1)
    cb1 = gamma_codebook(layout, 4, seed=7)
    cb2 = gamma_codebook(layout, 4, seed=7)
    assert cb1.entries == cb2.entries
    keys = {g.signal_key() for g in cb1.entries}
    assert len(keys) == 4
    shifts = {g.triples[0][:2] for g in cb1.entries}
    assert len(shifts) == 4  # all four dense-coding operators appear


def test_encode_causal_identity_gamma():
    layout = schmidt_layout([0.5, 0.5], 2)
    cb = protosim.GammaCodebook(layout, (GammaVector(((0, 0, 0),)),), seed=0)
    xi = max_entangled(2)
    fam = EncoderFamily.identity(2, 1)
    rho = encode_causal(0, cb, xi, fam, [0, 0])
    psi = grouped_pair_power(xi, 2, 2)
    assert np.abs(rho - np.outer(psi, psi.conj())).max() <= 1e-12


def test_encode_causal_bell_states():
    # at n=1 on the merged layout the four shift values hit the four Bell states
    layout = schmidt_layout([0.5, 0.5], 1)
    entries = tuple(GammaVector(((a, b, 0),)) for a, b in itertools.product(range(2), repeat=2))
    cb = protosim.GammaCodebook(layout, entries, seed=0)
    xi = max_entangled(2)
    fam = EncoderFamily.identity(2, 1)
    bells = []
    for m in range(4):
        rho = encode_causal(m, cb, xi, fam, [0])
        bells.append(rho)
    for i in range(4):
        assert np.trace(bells[i] @ bells[i]).real == pytest.approx(1.0, abs=1e-12)
        for j in range(i):
            assert np.trace(bells[i] @ bells[j]).real == pytest.approx(0.0, abs=1e-12)


def test_encode_causal_ricochet_consistency(rng):
    layout = schmidt_layout([0.5, 0.5], 2)
    g = GammaVector(
        tuple((int(rng.integers(d)), int(rng.integers(d)), int(rng.integers(2))) for d in layout.block_sizes)
    )
    cb = protosim.GammaCodebook(layout, (g,), seed=0)
    xi = max_entangled(2)
    rho = encode_causal(0, cb, xi, EncoderFamily.identity(2, 1), [0, 0])
    psi = grouped_pair_power(xi, 2, 2)
    u = block_unitary(g, layout)
    reflected = np.kron(np.eye(4), u.T) @ psi
    assert np.abs(rho - np.outer(reflected, reflected.conj())).max() <= 1e-10


def test_covering_select_degenerate_parameter():
    p_sx = np.array([[0.5, 0.5]])
    cb = binned_codebook(p_sx, n=4, num_messages=2, excess_rate=0.5, seed=3)
    ell, failed = covering_select(cb, 1, [0, 0, 0, 0], delta=1.0)
    assert not failed
    assert ell == cb.bin_size  # first index of bin 1


def test_covering_select_zero_prob_pair():
    # p(x=1 | s=0) = 0: codewords containing 1 must be skipped for all-zero s^n
    p_sx = np.array([[0.5, 0.0], [0.25, 0.25]])
    cb = binned_codebook(p_sx, n=3, num_messages=1, excess_rate=1.0, seed=5)
    sn = [0, 0, 0]
    ell, failed = covering_select(cb, 0, sn, delta=0.6)
    if not failed:
        assert not np.any(cb.sequences[ell] == 1)


def test_covering_select_matches_monte_carlo():
    # classical cross-oracle at n=8: empirical failure rate over 200 seeds vs
    # the covering estimator, within 3 standard errors
    eps = 0.2
    p_sx = np.array([[(1 - eps) / 2, eps / 2], [eps / 2, (1 - eps) / 2]])
    n, delta = 8, 0.1
    excess = 0.2
    fails = 0
    trials = 200
    rng = np.random.default_rng(99)
    q = p_sx.sum(axis=1)
    for seed in range(trials):
        cb = binned_codebook(p_sx, n, num_messages=1, excess_rate=excess, seed=seed)
        sn = rng.choice(2, size=n, p=q)
        _, failed = covering_select(cb, 0, sn, delta)
        fails += failed
    rate_hat = fails / trials
    est = covering_monte_carlo(p_sx, excess, n, delta, trials=20000, seed=1)
    err = math.sqrt(rate_hat * (1 - rate_hat) / trials + 1e-12)
    assert abs(rate_hat - est.fail_prob_hat) <= 3 * (err + est.stderr) + 0.01


def test_channel_apply_n(rng, dephasing):
    from rpcap.quantum import apply_channel, random_density

    rho = random_density(8, rng)  # two letters (x) one rest qubit
    out = channel_apply_n(dephasing, [1, 0], rho, d_rest=2)
    step = apply_channel(dephasing.branches[1], rho, [2, 2, 2], target=0)
    step = apply_channel(dephasing.branches[0], step, [2, 2, 2], target=1)
    assert np.abs(out - step).max() <= 1e-12


def test_channel_apply_n_product_oracle(rng, stuck_half):
    from rpcap.quantum import apply_channel, random_density

    a = random_density(2, rng)
    b = random_density(2, rng)
    rho = np.kron(np.kron(a, b), np.eye(1))
    out = channel_apply_n(stuck_half, [0, 2], rho, d_rest=1)
    expect = np.kron(
        apply_channel(stuck_half.branches[0], a), apply_channel(stuck_half.branches[2], b)
    )
    assert np.abs(out - expect).max() <= 1e-12


def test_sqrt_measurement_projective():
    e0 = projector(np.array([1.0, 0.0]))
    e1 = projector(np.array([0.0, 1.0]))
    povm = sqrt_measurement([e0, e1])
    assert np.allclose(povm.elements[0], e0, atol=1e-12)
    assert np.allclose(povm.elements[1], e1, atol=1e-12)
    assert np.allclose(povm.elements[2], 0.0, atol=1e-9)


def test_sqrt_measurement_bell():
    bells = []
    phi = max_entangled(2)
    for a, b in itertools.product(range(2), repeat=2):
        u = heisenberg_weyl(2, a, b)
        bells.append(projector(np.kron(u, np.eye(2)) @ phi))
    povm = sqrt_measurement(bells)
    for i, s in enumerate(bells):
        assert np.trace(povm.elements[i] @ s).real == pytest.approx(1.0, abs=1e-10)


def test_sqrt_measurement_identical_signals(rng):
    from rpcap.quantum import random_density

    s = random_density(2, rng)
    povm = sqrt_measurement([s, s])
    assert np.allclose(povm.elements[0], povm.elements[1], atol=1e-12)
    assert np.trace(povm.elements[0] @ s).real == pytest.approx(0.5, abs=1e-10)


def test_sqrt_measurement_all_zero():
    with pytest.raises(ValueError):
        sqrt_measurement([np.zeros((2, 2))])


def test_average_signal_state_brute_force(dephasing, precorrect_family):
    # enumerate the whole codeword alphabet at n=2 on the strict type layout
    # and compare with the closed-form block average
    n = 2
    xi = max_entangled(2)
    layout = type_layout(n, 2)
    m_ch = virtual_channel(dephasing, precorrect_family)
    omega = protosim.reference_pair_state(dephasing, precorrect_family, xi, "causal")
    omega_n = protosim.grouped_power_state(omega, n, 2, 2)
    acc = np.zeros_like(omega_n)
    count = 0
    for triples in itertools.product(
        *[
            [(a, b, c) for a in range(d) for b in range(d) for c in range(2)]
            for d in layout.block_sizes
        ]
    ):
        u = block_unitary(GammaVector(tuple(triples)), layout)
        acc += protosim.conjugate_on_second_half(omega_n, u, 4)
        count += 1
    acc /= count
    weights = protosim.schmidt_weights(xi, 2)
    formula = protosim.average_signal_state(layout, weights, m_ch)
    assert np.abs(acc - formula).max() <= 1e-12


def test_packing_conditions_perfect_case():
    # orthogonal codeword projectors with the identity code projector; the
    # single-letter reference is the uniform pair state at n = 1
    states = [projector(v) for v in np.eye(4)]
    projs = states
    rep = packing_conditions_check(
        np.eye(4), projs, states, np.full(4, 0.25), (2.0, 1.0, 1.0), n=1, alpha=0.01
    )
    assert rep.condition_pass["trace_code"]
    assert rep.condition_pass["trace_codeword"]
    assert rep.condition_pass["rank"]
    assert rep.condition_pass["sandwich"]
    assert rep.passed


def test_packing_conditions_zero_projector_fails():
    states = [projector(v) for v in np.eye(4)]
    rep = packing_conditions_check(
        np.zeros((4, 4)), states, states, np.full(4, 0.25), (2.0, 1.0, 1.0), n=1, alpha=0.01
    )
    assert not rep.condition_pass["trace_code"]
    assert not rep.passed


def test_simulate_superdense(identity_rp):
    rep = simulate(
        "causal", identity_rp, EncoderFamily.identity(2, 1), max_entangled(2),
        n=1, num_messages=4, seed=11,
    )
    assert rep.max_error == 0.0


def test_simulate_depolarizing(depolarizing):
    for m in (2, 4):
        rep = simulate(
            "causal", depolarizing, EncoderFamily.identity(2, 1), max_entangled(2),
            n=1, num_messages=m, seed=5,
        )
        assert rep.avg_error == pytest.approx(1 - 1 / m, abs=1e-9)


def test_simulate_dephasing_precorrect(dephasing, precorrect_family):
    for n in (1, 2, 3):
        rep = simulate(
            "causal", dephasing, precorrect_family, max_entangled(2),
            n=n, num_messages=4, seed=3,
        )
        assert rep.max_error <= 1e-12


def test_simulate_reproducible(dephasing, precorrect_family):
    kw = dict(n=2, num_messages=3, seed=123)
    a = simulate("causal", dephasing, precorrect_family, max_entangled(2), **kw)
    b = simulate("causal", dephasing, precorrect_family, max_entangled(2), **kw)
    assert a == b


def test_simulate_noncausal_exact_flag(dephasing, precorrect_family):
    rep = simulate(
        "noncausal", dephasing, precorrect_family, max_entangled(2),
        n=2, num_messages=2, excess_rate=0.5, seed=9,
    )
    assert rep.exact_average
    assert rep.extra["bin_size"] == 2
    assert 0.0 <= rep.max_error <= 1.0


def test_simulate_noncausal_degenerate_parameter(identity_rp):
    # one parameter value: the scheme reduces to dense coding over bins
    rep = simulate(
        "noncausal", identity_rp, EncoderFamily.identity(2, 1), max_entangled(2),
        n=2, num_messages=2, excess_rate=0.5, covering_delta=1.0, seed=4,
    )
    assert rep.covering_failures == 0
    assert rep.max_error <= 1e-10


def test_simulate_error_decay_direct_decoder(stuck_half):
    # fixed sub-capacity rate; the direct decoder's error decays with n
    fam = EncoderFamily.identity(2, 3)
    errs = {}
    for n in (2, 3, 4, 5):
        rep = simulate(
            "causal", stuck_half, fam, max_entangled(2),
            n=n, num_messages=2, seed=21, decoder="direct",
        )
        errs[n] = rep.max_error
    assert errs[4] <= errs[2] + 0.02
    assert errs[5] <= errs[3] + 0.02


def test_simulate_cap(identity_rp):
    with pytest.raises(ValueError):
        simulate(
            "causal", identity_rp, EncoderFamily.identity(2, 1), max_entangled(2),
            n=7, num_messages=2, seed=1,
        )


def test_schmidt_alignment_required(identity_rp):
    xi = np.array([0.5, 0.5, 0.5, 0.5])  # product state, not Schmidt-aligned
    with pytest.raises(ValueError, match="Schmidt-aligned"):
        simulate(
            "causal", identity_rp, EncoderFamily.identity(2, 1), xi,
            n=1, num_messages=2, seed=1,
        )
