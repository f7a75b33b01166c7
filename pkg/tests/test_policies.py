import numpy as np
import pytest

from teammoe import env, net, policies, rate
from teammoe.policies import (
    DmoePolicy, dmoe_decide, dmoe_decide_batch, expert_outputs_batch,
    gating_weights_batch, load_team, make_dmoe_policy, make_teamdnn_policy,
    naive_wmmse_team, naive_wmmse_team_batch, perfect_csi_oracle,
    perfect_csi_oracle_batch, save_team, tdma_genie_powers, tdma_powers,
    team_from_dict, team_to_dict, teamdnn_decide, wmmse_powers,
    wmmse_powers_batch, wmmse_powers_trace,
)


# --- mixture and plain-net policies -------------------------------------------

def test_policy_shapes():
    rng = np.random.default_rng(0)
    pol = make_dmoe_policy(2, 1.0, rng)
    assert pol.n_e == 2 and pol.k == 2
    assert all(e.in_width == 6 and e.out_width == 1 for e in pol.experts)
    assert pol.gating.in_width == 2 and pol.gating.out_width == 2
    td = make_teamdnn_policy(3, 2.0, rng)
    assert td.net.in_width == 9 and td.net.out_width == 1


def test_make_policy_validation():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        make_dmoe_policy(0, 1.0, rng)
    with pytest.raises(ValueError):
        make_dmoe_policy(2, 0.0, rng)
    with pytest.raises(ValueError):
        make_dmoe_policy(2, 1.0, rng, n_e=0)


def test_decide_is_gate_expert_dot_product():
    rng = np.random.default_rng(2)
    pol = make_dmoe_policy(2, 3.0, rng)
    batch = env.sample_batch_arrays(np.array([0.7, 0.3]), 0.1, 40,
                                    np.random.default_rng(3))
    outs = expert_outputs_batch(pol, batch.csi[:, 0], batch.quality_estimate)
    gate = gating_weights_batch(pol, batch.quality_estimate)
    got = dmoe_decide_batch(pol, batch.csi[:, 0], batch.quality_estimate)
    np.testing.assert_allclose(got, np.einsum("ne,ne->n", outs, gate), atol=1e-12)
    assert np.all(got >= 0) and np.all(got <= 3.0)


def test_decide_one_hot_gating_selects_expert():
    rng = np.random.default_rng(4)
    pol = make_dmoe_policy(2, 1.0, rng)
    # saturate the gating softmax onto expert 1 via a huge output bias
    glayers = list(pol.gating.layers)
    last = glayers[-1]
    glayers[-1] = net.Layer(w=np.zeros_like(last.w),
                            b=np.array([-40.0, 40.0]), activation="softmax")
    pol = DmoePolicy(experts=pol.experts, gating=net.MlpParams(tuple(glayers)),
                     p_max=pol.p_max, n_e=pol.n_e, k=pol.k)
    batch = env.sample_batch_arrays(np.array([0.5, 0.5]), 0.0, 10,
                                    np.random.default_rng(5))
    outs = expert_outputs_batch(pol, batch.csi[:, 0], batch.quality_estimate)
    got = dmoe_decide_batch(pol, batch.csi[:, 0], batch.quality_estimate)
    np.testing.assert_allclose(got, outs[:, 1], atol=1e-12)


def test_decide_single_obs_matches_batch():
    rng = np.random.default_rng(6)
    pol = make_dmoe_policy(2, 2.0, rng)
    td = make_teamdnn_policy(2, 2.0, rng)
    samples = env.sample_batch(np.array([0.9, 0.1]), 0.05, 3,
                               np.random.default_rng(7))
    for s in samples:
        obs = s.observations[0]
        a = dmoe_decide(pol, obs)
        b = dmoe_decide_batch(pol, obs.csi[None], obs.quality_estimate[None])[0]
        assert a == b
        assert teamdnn_decide(td, obs) == pytest.approx(
            float(td.p_max * net.forward(td.net, obs.csi.reshape(1, -1))[0][0, 0]))


def test_decide_rejects_mismatched_obs():
    rng = np.random.default_rng(8)
    pol = make_dmoe_policy(2, 1.0, rng)
    obs = env.Observation(csi=np.ones((3, 3)), quality_estimate=np.ones(3))
    with pytest.raises(ValueError):
        dmoe_decide(pol, obs)


# --- WMMSE ---------------------------------------------------------------------

def test_wmmse_single_user_full_power():
    for p_max in (0.5, 1.0, 4.0):
        p = wmmse_powers(np.array([[1.3]]), p_max)
        assert p[0] == p_max


def test_wmmse_diagonal_channel_full_power():
    rng = np.random.default_rng(9)
    for _ in range(10):
        g = np.diag(rng.uniform(0.2, 3.0, size=3))
        p = wmmse_powers(g, 2.0)
        np.testing.assert_allclose(p, np.full(3, 2.0), atol=1e-6)


def test_wmmse_surrogate_non_increasing():
    rng = np.random.default_rng(10)
    for _ in range(100):
        g = 0.5 * rng.chisquare(2.0, size=(2, 2))
        _, trace = wmmse_powers_trace(g, 1.0)
        diffs = np.diff(trace)
        assert np.all(diffs <= 1e-9), f"surrogate increased: {diffs.max()}"


def test_wmmse_never_beaten_by_scaling():
    # WMMSE output should be a local optimum: scaling all powers hurts
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = 0.5 * rng.chisquare(2.0, size=(2, 2))
        p = wmmse_powers(g, 1.0)
        r = rate.sum_rate(g, p)
        assert r >= rate.sum_rate(g, 0.9 * p) - 1e-9


def test_wmmse_batch_matches_single():
    rng = np.random.default_rng(12)
    g = 0.5 * rng.chisquare(2.0, size=(25, 2, 2))
    pb = wmmse_powers_batch(g, 1.5)
    for i in range(25):
        np.testing.assert_allclose(pb[i], wmmse_powers(g[i], 1.5), atol=1e-12)


def test_wmmse_validation():
    with pytest.raises(ValueError):
        wmmse_powers(np.ones((2, 3)), 1.0)
    with pytest.raises(ValueError):
        wmmse_powers(np.eye(2), -1.0)
    with pytest.raises(ValueError):
        wmmse_powers(np.eye(2), 1.0, max_iter=0)
    with pytest.raises(ValueError):
        wmmse_powers(-np.eye(2), 1.0)


def test_naive_wmmse_equals_centralized_on_perfect_csi():
    rng = np.random.default_rng(13)
    batch = env.sample_batch_arrays(np.array([1.0, 1.0]), 0.0, 30, rng)
    team = naive_wmmse_team_batch(batch.csi, 1.0)
    central = wmmse_powers_batch(batch.true_channel, 1.0)
    np.testing.assert_allclose(team, central, atol=1e-12)


def test_naive_wmmse_observation_list_matches_batch():
    rng = np.random.default_rng(14)
    samples = env.sample_batch(np.array([0.6, 0.6]), 0.0, 4, rng)
    rng2 = np.random.default_rng(14)
    batch = env.sample_batch_arrays(np.array([0.6, 0.6]), 0.0, 4, rng2)
    team = naive_wmmse_team_batch(batch.csi, 1.0)
    for m, s in enumerate(samples):
        np.testing.assert_allclose(naive_wmmse_team(s.observations, 1.0),
                                   team[m], atol=1e-12)


# --- TDMA ------------------------------------------------------------------------

def test_tdma_round_robin():
    for slot in range(6):
        p = tdma_powers(3, slot, 2.0)
        assert p.sum() == 2.0
        assert p[slot % 3] == 2.0
    with pytest.raises(ValueError):
        tdma_powers(0, 0, 1.0)
    with pytest.raises(ValueError):
        tdma_powers(2, -1, 1.0)


def test_tdma_genie_picks_best_single_link():
    g = np.array([[0.5, 0.1], [0.2, 3.0]])
    p = tdma_genie_powers(g, 1.0)
    np.testing.assert_array_equal(p, [0.0, 1.0])
    rng = np.random.default_rng(15)
    for _ in range(20):
        g = 0.5 * rng.chisquare(2.0, size=(2, 2))
        p = tdma_genie_powers(g, 1.0)
        r = rate.sum_rate(g, p)
        for i in range(2):
            other = np.zeros(2)
            other[i] = 1.0
            assert r >= rate.sum_rate(g, other) - 1e-12


# --- grid-search oracle ---------------------------------------------------------

def test_oracle_single_user_full_power():
    g = np.array([[0.7]])
    np.testing.assert_array_equal(perfect_csi_oracle(g, 2.0), [2.0])


def test_oracle_beats_binary_vectors():
    rng = np.random.default_rng(16)
    for _ in range(50):
        g = 0.5 * rng.chisquare(2.0, size=(2, 2))
        p = perfect_csi_oracle(g, 1.0)
        best = rate.sum_rate(g, p)
        for b in ([0, 0], [0, 1], [1, 0], [1, 1]):
            assert best >= rate.sum_rate(g, np.array(b, dtype=float)) - 1e-12


def test_oracle_beats_wmmse():
    rng = np.random.default_rng(17)
    g = 0.5 * rng.chisquare(2.0, size=(200, 2, 2))
    po = perfect_csi_oracle_batch(g, 1.0)
    pw = wmmse_powers_batch(g, 1.0)
    ro = rate.sum_rate_batch(g, po)
    rw = rate.sum_rate_batch(g, pw)
    assert np.all(ro >= rw - 1e-9)


def test_oracle_batch_matches_single():
    rng = np.random.default_rng(18)
    g = 0.5 * rng.chisquare(2.0, size=(40, 2, 2))
    pb = perfect_csi_oracle_batch(g, 1.0, grid_points=21)
    for i in range(40):
        np.testing.assert_array_equal(pb[i], perfect_csi_oracle(g[i], 1.0,
                                                                grid_points=21))


def test_oracle_validation():
    with pytest.raises(ValueError):
        perfect_csi_oracle(np.eye(4), 1.0)          # k too large for grid search
    with pytest.raises(ValueError):
        perfect_csi_oracle(np.eye(2), 1.0, grid_points=1)
    with pytest.raises(ValueError):
        perfect_csi_oracle(np.eye(2), 0.0)


# --- team serialization -----------------------------------------------------------

def test_team_roundtrip_mixture(tmp_path):
    rng = np.random.default_rng(19)
    team = [make_dmoe_policy(2, 5.0, rng) for _ in range(2)]
    path = tmp_path / "team.json"
    save_team(team, path)
    loaded = load_team(path)
    batch = env.sample_batch_arrays(np.array([0.8, 0.2]), 0.0, 6,
                                    np.random.default_rng(20))
    for j in range(2):
        np.testing.assert_array_equal(
            dmoe_decide_batch(team[j], batch.csi[:, j], batch.quality_estimate),
            dmoe_decide_batch(loaded[j], batch.csi[:, j], batch.quality_estimate))
    # byte-stable: dump of the loaded team equals the file contents
    assert (tmp_path / "team.json").read_text() == __import__("json").dumps(
        team_to_dict(loaded), sort_keys=True, separators=(",", ":"))


def test_team_roundtrip_plain_net(tmp_path):
    rng = np.random.default_rng(21)
    team = [make_teamdnn_policy(2, 1.0, rng) for _ in range(2)]
    path = tmp_path / "tdnn.json"
    save_team(team, path)
    loaded = load_team(path)
    assert all(isinstance(p, policies.TeamDnnPolicy) for p in loaded)
    batch = env.sample_batch_arrays(np.array([0.5, 0.5]), 0.0, 4,
                                    np.random.default_rng(22))
    for j in range(2):
        np.testing.assert_array_equal(
            policies.teamdnn_decide_batch(team[j], batch.csi[:, j]),
            policies.teamdnn_decide_batch(loaded[j], batch.csi[:, j]))


def test_team_from_dict_rejects_foreign():
    rng = np.random.default_rng(23)
    doc = team_to_dict([make_dmoe_policy(2, 1.0, rng) for _ in range(2)])
    bad = dict(doc)
    bad["format"] = "other"
    with pytest.raises(ValueError):
        team_from_dict(bad)
    bad = dict(doc)
    bad["kind"] = "mystery"
    with pytest.raises(ValueError):
        team_from_dict(bad)
    bad = dict(doc)
    bad["input_layout"] = 99
    with pytest.raises(ValueError):
        team_from_dict(bad)
