import numpy as np
import pytest

from conftest import TOY_CONFIG, random_case, reference_dispatch, toy_dataset
from renewgrid.dispatch import (
    GridConfig, find_outages, myopia_check, simulate, simulate_many, simulate_summary, step, verify_trace,
)
from renewgrid.errors import ConfigError, DataIntegrityError, InvariantViolation
from renewgrid.timeseries import GridDataset, synthetic_dataset


def test_toy_golden():
    res = simulate(TOY_CONFIG, toy_dataset(), initial_storage=0.0, trace=True)
    assert res.reliability == 0.5
    assert res.gas_share == 0.25
    assert len(res.outages) == 1
    (ev,) = res.outages
    assert (ev.start, ev.duration) == (3, 3)
    assert ev.hourly_fraction_met == (0.5, 0.5, 0.5)
    assert ev.energy_fraction_met == 0.5
    np.testing.assert_array_equal(res.trace.storage_level, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    np.testing.assert_array_equal(res.trace.gas_out, [0, 0, 0, 0.5, 0.5, 0.5])
    np.testing.assert_array_equal(res.trace.curtailed, [0, 1.0, 0, 0, 0, 0])
    assert res.lole_hours_per_year == pytest.approx(0.5 * 8766)


def test_step_examples():
    cfg = GridConfig(1.0, 0.5, storage_energy=4.0, dispatch_capacity=0.5, threshold_fraction=0.25)
    # storage above threshold covers the deficit
    s = step(cfg, 3.0, 1.0, 2.0)
    assert (s.discharge, s.gas_out, s.served, s.storage_level) == (1.0, 0.0, 2.0, 2.0)
    # at the threshold gas runs, short of demand
    s = step(cfg, 1.0, 1.0, 2.0)
    assert (s.discharge, s.gas_out, s.served) == (0.0, 0.5, 1.5)
    # surplus fills storage, the rest is curtailed
    s = step(cfg, 3.5, 2.0, 1.0)
    assert (s.charge, s.curtailed, s.storage_level) == (0.5, 0.5, 4.0)
    # gas serves the load first and refills only up to the threshold
    big = GridConfig(1.0, 0.5, 4.0, 5.0, 0.25)
    s = step(big, 0.2, 1.0, 2.0)
    assert s.gas_out == pytest.approx(1.0 + 0.8) and s.storage_level == pytest.approx(1.0)
    # cascade: drawn down past the threshold, residual remains, gas fires in the same hour
    s = step(cfg, 1.5, 0.0, 2.0)
    assert s.discharge == 1.5 and s.gas_out == 0.5 and s.served == 2.0


def test_power_cap():
    cfg = GridConfig(1.0, 0.0, 10.0, 0.0, 0.0)
    s = step(cfg, 5.0, 0.0, 3.0, storage_power=1.0)
    assert s.discharge == 1.0 and s.served == 1.0
    s = step(cfg, 5.0, 4.0, 1.0, storage_power=1.0)
    assert s.charge == 1.0 and s.curtailed == 2.0


def _oracle_trace(ds, cfg, init, power=float("inf")):
    peak = ds.peak_demand
    solar_cap = cfg.overbuild * (1 - cfg.wind_fraction) * peak
    wind_cap = cfg.overbuild * cfg.wind_fraction * peak
    gen = [solar_cap * s + wind_cap * w for s, w in zip(ds.solar_cf.tolist(), ds.wind_cf.tolist())]
    return np.array(reference_dispatch(gen, ds.demand, cfg.storage_energy, cfg.dispatch_capacity,
                                       cfg.threshold_energy, init * cfg.storage_energy, power))


def test_matches_straight_line_oracle(rng):
    for _ in range(300):
        ds, cfg, init = random_case(rng)
        power = float(rng.choice([np.inf, rng.uniform(0.05, 1)]))
        sp = None if np.isinf(power) else power
        tr = simulate(cfg, ds, initial_storage=init, storage_power=sp, trace=True).trace
        ref = _oracle_trace(ds, cfg, init, power)
        got = np.column_stack([tr.storage_level, tr.gas_out, tr.charge, tr.discharge, tr.served, tr.curtailed])
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-9)


def test_invariants_random(rng):
    for _ in range(300):
        ds, cfg, init = random_case(rng)
        res = simulate(cfg, ds, initial_storage=init, trace=True)
        verify_trace(res.trace, cfg)
        assert 0 <= res.reliability <= 1 and 0 <= res.gas_share <= 1


def test_threshold_gating(rng):
    """Gas only runs once storage, after this hour's discharge, is at or below the threshold."""
    for _ in range(300):
        ds, cfg, init = random_case(rng)
        tr = simulate(cfg, ds, initial_storage=init, trace=True).trace
        start = np.concatenate([[init * cfg.storage_energy], tr.storage_level[:-1]])
        after_discharge = start - tr.discharge
        fired = tr.gas_out > 0
        assert np.all(after_discharge[fired] <= cfg.threshold_energy + 1e-12)
        # a cascade hour only fires gas after storage was drawn down
        above = start > cfg.threshold_energy
        assert np.all(tr.discharge[fired & above] > 0)


def test_summary_and_batch_agree_with_simulate(rng):
    for _ in range(50):
        ds, cfg, init = random_case(rng)
        full = simulate(cfg, ds, initial_storage=init)
        assert simulate_summary(cfg, ds, initial_storage=init) == (full.reliability, full.gas_share)
        rel, gas = simulate_many(np.array([cfg.as_tuple()]), ds, initial_storage=init)
        assert (rel[0], gas[0]) == (full.reliability, full.gas_share)


def test_simulate_many_independent_of_split(rng):
    ds = synthetic_dataset(300, seed=5)
    params = np.column_stack([rng.uniform(0, 4, 40), rng.random(40), rng.uniform(0, 2000, 40),
                               rng.uniform(0, 300, 40), rng.random(40)])
    one = simulate_many(params, ds, workers=1)
    for w in (2, 3, 7, 64):
        other = simulate_many(params, ds, workers=w)
        np.testing.assert_array_equal(one[0], other[0])
        np.testing.assert_array_equal(one[1], other[1])


def test_myopia(rng):
    ds = synthetic_dataset(500, seed=2)
    for _ in range(20):
        cfg = GridConfig(float(rng.uniform(0.5, 3)), float(rng.random()), float(rng.uniform(0, 3000)),
                         float(rng.uniform(0, 300)), float(rng.random()))
        assert myopia_check(cfg, ds, int(rng.integers(0, 501)))
    assert myopia_check(TOY_CONFIG, toy_dataset(), 0)
    with pytest.raises(DataIntegrityError):
        myopia_check(TOY_CONFIG, toy_dataset(), 7)


def test_full_backup_gives_full_reliability(rng):
    for _ in range(100):
        ds, cfg, init = random_case(rng)
        cfg = GridConfig(cfg.overbuild, cfg.wind_fraction, cfg.storage_energy, ds.peak_demand, 1.0)
        assert simulate(cfg, ds, initial_storage=init).reliability == 1.0


def test_zero_capacity_and_threshold_zero():
    ds = synthetic_dataset(100)
    assert simulate(GridConfig(0.0, 0.5), ds).reliability == 0.0
    # threshold 0 with gas: backup only when storage is empty
    cfg = GridConfig(2.0, 0.0, storage_energy=1.0, dispatch_capacity=0.5, threshold_fraction=0.0)
    tr = simulate(cfg, toy_dataset(), initial_storage=0.0, trace=True).trace
    start = np.concatenate([[0.0], tr.storage_level[:-1]])
    assert np.all((start - tr.discharge)[tr.gas_out > 0] == 0.0)


def _pairs(rng, n, *, vary):
    """Random configs and a copy with ``vary`` increased."""
    out = []
    for _ in range(n):
        ds, cfg, init = random_case(rng)
        bump = dict(cfg.__dict__)
        bump[vary] += float(rng.uniform(0, 1))
        out.append((ds, cfg, GridConfig(**bump), init))
    return out


def test_reliability_monotone_in_dispatch_capacity(rng):
    for ds, lo, hi, init in _pairs(rng, 2000, vary="dispatch_capacity"):
        rel = simulate_many(np.array([lo.as_tuple(), hi.as_tuple()]), ds, initial_storage=init)[0]
        assert rel[1] >= rel[0]


@pytest.mark.parametrize("regime", ["no_storage", "threshold_zero", "threshold_one"])
def test_reliability_monotone_in_overbuild_without_partial_gate(rng, regime):
    """Monotone whenever the threshold cannot split stored energy into reachable and locked parts."""
    for ds, lo, hi, init in _pairs(rng, 1500, vary="overbuild"):
        fix = {"no_storage": {"storage_energy": 0.0}, "threshold_zero": {"threshold_fraction": 0.0},
               "threshold_one": {"threshold_fraction": 1.0}}[regime]
        lo = GridConfig(**(lo.__dict__ | fix))
        hi = GridConfig(**(hi.__dict__ | fix))
        rel = simulate_many(np.array([lo.as_tuple(), hi.as_tuple()]), ds, initial_storage=init)[0]
        assert rel[1] >= rel[0]


def test_partial_threshold_can_break_overbuild_monotonicity():
    """Pinned witness: more generation keeps storage above a 50% gate, which then drains earlier.

    With the smaller build hour 0 ends just under the gate, so hour 1 is shed
    entirely and the locked reserve later covers hour 3; the larger build
    spends that reserve in hour 1 and is short in hour 3 as well.
    """
    ds = GridDataset(np.array([0.25, 0.0, 1.0, 0.5]), np.zeros(4), np.full(4, 0.75))
    lo = simulate(GridConfig(1.25, 0.0, 1.0, 0.0, 0.5), ds, initial_storage=1.0)
    hi = simulate(GridConfig(1.5, 0.0, 1.0, 0.0, 0.5), ds, initial_storage=1.0)
    assert (lo.reliability, hi.reliability) == (0.75, 0.5)


def test_outage_grouping():
    demand = np.ones(8)
    unserved = np.array([0, 0.5, 0.2, 0, 0, 1.0, 0, 0.1])
    table = find_outages(demand - unserved, demand, unserved)
    assert table.starts.tolist() == [1, 5, 7]
    assert table.durations.tolist() == [2, 1, 1]
    ev = table.events()
    assert ev[0].hourly_fraction_met == (0.5, 0.8)
    assert ev[0].energy_fraction_met == pytest.approx(0.65)
    assert ev[1].min_fraction_met == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        GridConfig(-1.0, 0.5)
    with pytest.raises(ConfigError):
        GridConfig(1.0, 1.5)
    with pytest.raises(ConfigError):
        GridConfig(1.0, 0.5, threshold_fraction=2.0)
    with pytest.raises(ConfigError):
        GridConfig(1.0, 0.5, storage_energy=float("nan"))
    with pytest.raises(ConfigError):
        simulate(TOY_CONFIG, toy_dataset(), initial_storage=1.5)


def test_verify_trace_catches_corruption():
    res = simulate(TOY_CONFIG, toy_dataset(), initial_storage=0.0, trace=True)
    res.trace.storage_level[2] = 2.0
    with pytest.raises(InvariantViolation, match="above capacity at hour 2"):
        verify_trace(res.trace, TOY_CONFIG)


def test_trace_frame_columns(tmp_path):
    res = simulate(TOY_CONFIG, toy_dataset(), initial_storage=0.0, trace=True)
    assert list(res.trace.to_frame().columns) == ["hour", "storage_level", "gas_out", "served", "curtailed"]
    s = res.trace.state(3)
    assert s.gas_out == 0.5 and s.residual == 1.0
