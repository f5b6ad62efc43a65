import numpy as np
import pytest

from rpcap.classical import (
    ClassicalChannelWithState,
    binary_entropy,
    blahut_arimoto,
    gelfand_pinsker_capacity,
    gelfand_pinsker_grid_oracle,
    load_classical_spec,
    shannon_strategy_capacity,
)


def bsc_with_state(p: float) -> ClassicalChannelWithState:
    w = np.zeros((2, 2, 2))
    for s in range(2):
        w[:, :, s] = [[1 - p, p], [p, 1 - p]]
    return ClassicalChannelWithState(w, np.array([0.5, 0.5]))


def xor_channel() -> ClassicalChannelWithState:
    w = np.zeros((2, 2, 2))
    for x in range(2):
        for s in range(2):
            w[x ^ s, x, s] = 1.0
    return ClassicalChannelWithState(w, np.array([0.5, 0.5]))


def stuck_at_memory(p: float) -> ClassicalChannelWithState:
    w = np.zeros((2, 2, 3))
    w[0, :, 0] = 1.0
    w[1, :, 1] = 1.0
    w[0, 0, 2] = w[1, 1, 2] = 1.0
    return ClassicalChannelWithState(w, np.array([p / 2, p / 2, 1 - p]))


def test_blahut_arimoto_bsc():
    w = np.array([[0.9, 0.1], [0.1, 0.9]])
    cap, r = blahut_arimoto(w)
    assert cap == pytest.approx(1 - binary_entropy(0.1), abs=1e-6)
    assert np.allclose(r, [0.5, 0.5], atol=1e-4)


def test_blahut_arimoto_noiseless():
    cap, _ = blahut_arimoto(np.eye(2))
    assert cap == pytest.approx(1.0, abs=1e-9)


def test_shannon_strategy_noiseless_state_free():
    w = np.zeros((2, 2, 2))
    for s in range(2):
        w[:, :, s] = np.eye(2)
    ch = ClassicalChannelWithState(w, np.array([0.5, 0.5]))
    assert shannon_strategy_capacity(ch) == pytest.approx(1.0, abs=1e-6)


def test_shannon_strategy_xor():
    # independent oracle: exhaustive evaluation of the four strategies
    ch = xor_channel()
    best_noiseless = False
    for t0 in range(2):
        for t1 in range(2):
            p_y = 0.5 * ch.w[:, t0, 0] + 0.5 * ch.w[:, t1, 1]
            if p_y.max() == 1.0:
                best_noiseless = True
    assert best_noiseless  # two strategies are deterministic letters
    assert shannon_strategy_capacity(ch) == pytest.approx(1.0, abs=1e-6)


def test_shannon_strategy_useless_input():
    w = np.zeros((2, 2, 2))
    w[0, :, :] = 0.7
    w[1, :, :] = 0.3
    ch = ClassicalChannelWithState(w, np.array([0.5, 0.5]))
    assert shannon_strategy_capacity(ch) == pytest.approx(0.0, abs=1e-9)


def test_gp_state_independent_matches_capacity():
    ch = bsc_with_state(0.1)
    direct, _ = blahut_arimoto(np.array([[0.9, 0.1], [0.1, 0.9]]))
    assert gelfand_pinsker_capacity(ch, u_size=2) == pytest.approx(direct, abs=1e-3)


def test_gp_bsc_tight():
    ch = bsc_with_state(0.1)
    assert gelfand_pinsker_capacity(ch, 2) == pytest.approx(1 - binary_entropy(0.1), abs=1e-4)
    assert shannon_strategy_capacity(ch) == pytest.approx(1 - binary_entropy(0.1), abs=1e-4)


def test_gp_stuck_at_memory():
    # frozen from the exhaustive 0.01-step grid oracle (value 0.700000)
    ch = stuck_at_memory(0.3)
    assert gelfand_pinsker_capacity(ch, 2) == pytest.approx(0.7, abs=0.02)
    coarse = gelfand_pinsker_grid_oracle(ch, 2, grid_step=1.0 / 12)
    assert coarse == pytest.approx(0.7, abs=0.02)


def test_gp_degenerate_transparent():
    w = np.zeros((2, 2, 3))
    w[0, :, 0] = 1.0
    w[1, :, 1] = 1.0
    w[0, 0, 2] = w[1, 1, 2] = 1.0
    ch = ClassicalChannelWithState(w, np.array([0.0, 0.0, 1.0]))
    assert gelfand_pinsker_capacity(ch, 2) == pytest.approx(1.0, abs=1e-6)


def test_gp_cap():
    ch = stuck_at_memory(0.3)
    with pytest.raises(ValueError):
        gelfand_pinsker_capacity(ch, u_size=5, map_cap=100)


def test_validation():
    w = np.zeros((2, 2, 2))
    w[0, :, :] = 0.6
    w[1, :, :] = 0.3
    with pytest.raises(ValueError, match="sums to"):
        ClassicalChannelWithState(w, np.array([0.5, 0.5]))


def test_load_classical_spec(tmp_path):
    import json

    w = [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]]
    path = tmp_path / "cls.json"
    path.write_text(json.dumps({"w": w, "q": [0.5, 0.5]}))
    ch = load_classical_spec(path)
    assert ch.x_size == 2 and ch.s_size == 2 and ch.y_size == 2
