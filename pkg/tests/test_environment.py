import csv

import numpy as np
import pytest

from wlanrrm.environment import (
    EvalRecord,
    NeighborhoodModel,
    NoiseSpec,
    Observation,
    busy_fraction,
    evaluate,
    neighbor_weight,
    observe,
    weight_matrix,
    write_eval_record,
)
from wlanrrm.errors import ValidationError
from wlanrrm.topology import (
    BAND_2G4,
    ChannelAssignment,
    ChannelConfig,
    Network,
    action_space,
    random_network,
)


def mesh2(rssi_db, loads):
    r = np.array([[-40.0, rssi_db], [rssi_db, -40.0]])
    return Network(BAND_2G4, r, np.array(loads))


CFG_SAME = ChannelConfig((ChannelAssignment(1, 1), ChannelAssignment(1, 1)))
CFG_DISJ1 = ChannelConfig((ChannelAssignment(1, 1), ChannelAssignment(2, 1)))
CFG_WIDE = ChannelConfig((ChannelAssignment(1, 2), ChannelAssignment(3, 2)))
THR = NeighborhoodModel.threshold()
SIG = NeighborhoodModel.sigmoid()


def test_default_constants():
    assert THR.threshold_dbm == -82.0
    assert SIG.threshold_dbm == -82.0
    assert SIG.spread_db == 6.0


def test_neighbor_weight_threshold_step():
    assert neighbor_weight(-81.9, THR) == 1.0
    assert neighbor_weight(-82.0, THR) == 1.0  # inclusive at the threshold
    assert neighbor_weight(-82.1, THR) == 0.0
    w = neighbor_weight(np.array([-90.0, -82.0, -60.0]), THR)
    assert w.tolist() == [0.0, 1.0, 1.0]


def test_neighbor_weight_sigmoid_shape():
    assert neighbor_weight(-82.0, SIG) == pytest.approx(0.5)
    # half a spread away the weight reaches 1/(1+e^-2)
    assert neighbor_weight(-79.0, SIG) == pytest.approx(1.0 / (1.0 + np.exp(-2.0)))
    assert neighbor_weight(-85.0, SIG) == pytest.approx(1.0 / (1.0 + np.exp(2.0)))
    r = np.linspace(-110.0, -40.0, 141)
    w = neighbor_weight(r, SIG)
    assert np.all(np.diff(w) > 0)  # strictly increasing
    assert np.all((w > 0.0) & (w < 1.0))


def test_weight_matrix_zeroes_diagonal():
    net = mesh2(-60.0, [0.5, 0.5])
    w = weight_matrix(net.rssi, THR)
    assert w[0, 0] == 0.0 and w[1, 1] == 0.0
    assert w[0, 1] == 1.0 and w[1, 0] == 1.0


def test_two_ap_same_channel_closed_form():
    net = mesh2(-60.0, [0.6, 0.3])
    rec = evaluate(net, CFG_SAME, THR)
    assert rec.busy_fraction.tolist() == [0.3, 0.6]
    assert rec.achieved_airtime == pytest.approx([0.6 * 0.7, 0.3 * 0.4])
    assert rec.utilization == pytest.approx([0.9, 0.9])
    # utility 0.54 against the width-2 bound 1.8
    assert rec.regret == pytest.approx(0.7)


def test_two_ap_disjoint_narrow():
    net = mesh2(-60.0, [0.6, 0.3])
    rec = evaluate(net, CFG_DISJ1, THR)
    assert rec.busy_fraction.tolist() == [0.0, 0.0]
    # full airtime at width 1 still loses half the bound
    assert rec.regret == pytest.approx(0.5)


def test_two_ap_disjoint_wide_is_optimal():
    net = mesh2(-60.0, [0.6, 0.3])
    rec = evaluate(net, CFG_WIDE, THR)
    assert rec.regret == pytest.approx(0.0)
    assert rec.utilization == pytest.approx([0.6, 0.3])


def test_below_threshold_neighbors_are_free():
    net = mesh2(-90.0, [0.9, 0.9])
    rec = evaluate(net, CFG_SAME, THR)
    assert rec.busy_fraction.tolist() == [0.0, 0.0]


def test_busy_caps_at_one():
    r = np.full((3, 3), -60.0)
    np.fill_diagonal(r, -40.0)
    net = Network(BAND_2G4, r, np.array([0.9, 0.9, 0.9]))
    cfg = ChannelConfig((ChannelAssignment(1, 1),) * 3)
    rec = evaluate(net, cfg, THR)
    assert rec.busy_fraction.tolist() == [1.0, 1.0, 1.0]  # 1.8 capped
    assert rec.achieved_airtime.tolist() == [0.0, 0.0, 0.0]
    assert rec.utilization.tolist() == [1.0, 1.0, 1.0]


def test_partial_block_overlap_counts():
    net = mesh2(-60.0, [0.5, 0.5])
    # (1,2) covers channels {1,2}; (2,1) covers {2}: overlapping
    cfg = ChannelConfig((ChannelAssignment(1, 2), ChannelAssignment(2, 1)))
    b = busy_fraction(net, cfg, THR)
    assert b.tolist() == [0.5, 0.5]
    # (3,2) covers {3,4}: disjoint from {2}
    cfg2 = ChannelConfig((ChannelAssignment(3, 2), ChannelAssignment(2, 1)))
    assert busy_fraction(net, cfg2, THR).tolist() == [0.0, 0.0]


def test_asymmetric_rssi_uses_receiver_row():
    r = np.array([[-40.0, -60.0], [-95.0, -40.0]])
    net = Network(BAND_2G4, r, np.array([0.4, 0.8]))
    b = busy_fraction(net, CFG_SAME, THR)
    # AP0 hears AP1 (-60) but not vice versa (-95)
    assert b[0] == pytest.approx(0.8)
    assert b[1] == pytest.approx(0.0)


def test_zero_load_network_has_zero_regret():
    net = mesh2(-60.0, [0.0, 0.0])
    rec = evaluate(net, CFG_SAME, THR)
    assert rec.regret == 0.0


def test_evaluate_validates_config():
    net = mesh2(-60.0, [0.5, 0.5])
    short = ChannelConfig((ChannelAssignment(1, 1),))
    with pytest.raises(ValidationError):
        evaluate(net, short, THR)


def test_evaluate_rejects_observation():
    net = mesh2(-60.0, [0.5, 0.5])
    obs = observe(net)
    with pytest.raises(ValidationError):
        evaluate(obs, CFG_SAME, THR)


def test_busy_fraction_accepts_observation():
    net = mesh2(-60.0, [0.5, 0.5])
    obs = observe(net, NoiseSpec(0.0, 2.0, seed=5))
    b = busy_fraction(obs, CFG_SAME, THR)
    assert b.shape == (2,)


def test_observe_noiseless_is_exact():
    net = mesh2(-70.0, [0.3, 0.6])
    obs = observe(net)
    assert isinstance(obs, Observation)
    assert np.array_equal(obs.observed_rssi, net.rssi)
    assert np.array_equal(obs.load, net.load)
    assert obs.band is net.band


def test_observe_noise_spares_diagonal_and_load():
    net = mesh2(-70.0, [0.3, 0.6])
    obs = observe(net, NoiseSpec(mean_db=3.0, std_db=1.0, seed=9))
    assert obs.observed_rssi[0, 0] == net.rssi[0, 0]
    assert obs.observed_rssi[1, 1] == net.rssi[1, 1]
    assert obs.observed_rssi[0, 1] != net.rssi[0, 1]
    assert np.array_equal(obs.load, net.load)


def test_observe_deterministic_per_seed():
    net = random_network(5, BAND_2G4, density=2.0, seed=3)
    a = observe(net, NoiseSpec(0.0, 2.0, seed=4))
    b = observe(net, NoiseSpec(0.0, 2.0, seed=4))
    c = observe(net, NoiseSpec(0.0, 2.0, seed=5))
    assert np.array_equal(a.observed_rssi, b.observed_rssi)
    assert not np.array_equal(a.observed_rssi, c.observed_rssi)


def test_observe_with_explicit_rng():
    net = mesh2(-70.0, [0.3, 0.6])
    rng = np.random.default_rng(0)
    a = observe(net, NoiseSpec(0.0, 1.0, seed=0), rng=rng)
    b = observe(net, NoiseSpec(0.0, 1.0, seed=0), rng=np.random.default_rng(0))
    assert np.array_equal(a.observed_rssi, b.observed_rssi)


def test_noise_spec_validation():
    NoiseSpec(0.0, 0.0, seed=0)
    with pytest.raises(ValidationError):
        NoiseSpec(0.0, -1.0, seed=0)


def test_model_validation():
    with pytest.raises(ValidationError):
        NeighborhoodModel("sigmoid", spread_db=0.0)
    with pytest.raises(ValidationError):
        NeighborhoodModel("fuzzy")


def test_property_suite_random_instances():
    """Bulk invariants over random networks and random valid configs."""
    rng = np.random.default_rng(20240817)
    actions = action_space(BAND_2G4)
    for case in range(300):
        n = int(rng.integers(2, 7))
        net = random_network(
            n, BAND_2G4, density=float(rng.uniform(0.3, 5.0)), seed=int(rng.integers(2**31))
        )
        cfg = ChannelConfig(tuple(actions[i] for i in rng.integers(0, len(actions), size=n)))
        model = THR if case % 2 == 0 else SIG
        rec = evaluate(net, cfg, model)
        assert 0.0 <= rec.regret <= 1.0
        assert np.all(rec.busy_fraction >= 0.0) and np.all(rec.busy_fraction <= 1.0)
        assert np.all(rec.achieved_airtime >= 0.0)
        assert np.all(rec.achieved_airtime <= net.load + 1e-15)
        assert np.all(rec.utilization >= net.load - 1e-15)
        assert np.all(rec.utilization <= 1.0)
        # scoring must agree with the direct definition
        manual = np.minimum(1.0, (weight_matrix(net.rssi, model) * _co_channel(cfg)) @ net.load)
        assert np.allclose(rec.busy_fraction, manual)


def _co_channel(cfg):
    from wlanrrm.topology import config_masks

    masks = config_masks(cfg, BAND_2G4)
    return (masks @ masks.T) > 0


def test_raising_neighbor_load_never_lowers_busy():
    rng = np.random.default_rng(7)
    for _ in range(50):
        net = random_network(4, BAND_2G4, density=3.0, seed=int(rng.integers(2**31)))
        cfg = ChannelConfig((ChannelAssignment(1, 1),) * 4)
        b0 = busy_fraction(net, cfg, THR)
        load2 = net.load.copy()
        j = int(rng.integers(0, 4))
        load2[j] = min(1.0, load2[j] + 0.3)
        b1 = busy_fraction(net.with_load(load2), cfg, THR)
        others = np.arange(4) != j
        assert np.all(b1[others] >= b0[others] - 1e-15)


def test_write_eval_record(tmp_path):
    net = mesh2(-60.0, [0.6, 0.3])
    rec = evaluate(net, CFG_WIDE, THR)
    p = tmp_path / "rec.csv"
    write_eval_record(rec, p, policy="oracle")
    rows = list(csv.reader(p.open()))
    assert rows[0][0] == "row"
    assert len(rows) == 4  # header + 2 APs + summary
    assert rows[1][0] == "ap" and rows[1][1] == "oracle"
    assert rows[3][0] == "summary"
    assert float(rows[3][-1]) == pytest.approx(rec.regret)


def test_eval_record_fields():
    net = mesh2(-60.0, [0.6, 0.3])
    rec = evaluate(net, CFG_WIDE, THR)
    assert isinstance(rec, EvalRecord)
    assert rec.config is CFG_WIDE
