import numpy as np
import pytest

from renewgrid.errors import DataIntegrityError
from renewgrid.timeseries import (
    DemandSeries, GenerationProfile, GridDataset, aggregate_area_average, aggregate_capacity_weighted,
    build_demand, hourly_range, read_dataset, repair_demand, replicate_demand_year, scale_to_capacity,
    synthetic_dataset, write_dataset,
)

TS = hourly_range("2022-01-01T00", 4)


def _profile(values, tech="solar", ts=TS):
    return GenerationProfile(tech, np.asarray(values, dtype=float), ts)


def test_area_average_is_cellwise_mean():
    a = _profile([0.0, 0.2, 0.4, 1.0])
    b = _profile([0.2, 0.2, 0.0, 0.5])
    avg = aggregate_area_average([a, b])
    np.testing.assert_allclose(avg.values, [0.1, 0.2, 0.2, 0.75])
    assert aggregate_area_average([a]).values.tolist() == a.values.tolist()


def test_area_average_rejects_mismatch():
    a = _profile([0.1] * 4)
    with pytest.raises(DataIntegrityError):
        aggregate_area_average([a, _profile([0.1] * 4, ts=hourly_range("2022-01-01T01", 4))])
    with pytest.raises(DataIntegrityError):
        aggregate_area_average([a, _profile([0.1] * 4, tech="wind")])
    with pytest.raises(DataIntegrityError):
        aggregate_area_average([])


def test_capacity_weighted(rng):
    a = _profile([0.0, 0.5, 1.0, 0.2])
    b = _profile([1.0, 0.5, 0.0, 0.4])
    out = aggregate_capacity_weighted({"A": a, "B": b}, {"A": 3.0, "B": 1.0})
    np.testing.assert_allclose(out.values, [0.25, 0.5, 0.75, 0.25])
    only = aggregate_capacity_weighted({"A": a, "B": b}, {"A": 2.0})
    np.testing.assert_array_equal(only.values, a.values)
    with pytest.raises(DataIntegrityError):
        aggregate_capacity_weighted({"A": a}, {"A": 0.0})
    with pytest.raises(DataIntegrityError):
        aggregate_capacity_weighted({"A": a}, {"Z": 1.0})
    # convex combination stays within the envelope of its inputs
    profs = {str(k): _profile(rng.random(4)) for k in range(5)}
    w = {k: float(rng.random()) for k in profs}
    out = aggregate_capacity_weighted(profs, w).values
    stack = np.vstack([p.values for p in profs.values()])
    assert np.all(out >= stack.min(0)) and np.all(out <= stack.max(0))


def test_profile_validation():
    with pytest.raises(DataIntegrityError):
        _profile([0.1, 1.2, 0.0, 0.0])
    with pytest.raises(DataIntegrityError, match="non-hourly"):
        GenerationProfile("solar", np.zeros(2), np.array(["2022-01-01T00", "2022-01-01T02"], dtype="datetime64[s]"))
    p = _profile([0.1] * 4)
    with pytest.raises(ValueError):
        p.values[0] = 0.5


def test_repair_demand_interpolates():
    raw = np.full(8760, 300.0)
    raw[100:103] = np.nan
    raw[99], raw[103] = 100.0, 500.0
    out = repair_demand(raw)
    np.testing.assert_allclose(out.values[99:104], [100, 200, 300, 400, 500])
    raw[:2] = np.nan
    assert repair_demand(raw).values[0] == 300.0


def test_repair_demand_coverage_threshold():
    raw = np.full(8760, 300.0)
    raw[:60] = np.nan  # exactly 8700 present
    assert len(repair_demand(raw, country="XX")) == 8760
    raw[60] = np.nan
    with pytest.raises(DataIntegrityError, match="XX: only 8699 of 8760"):
        repair_demand(raw, country="XX")


def test_replicate_demand_year_leap_handling():
    one = DemandSeries(np.arange(8760, dtype=float) + 1.0, hourly_range("2022-01-01T00", 8760))
    out = replicate_demand_year(one, 1980, 2022)
    assert len(out) == 376944
    # 1980 is a leap year: Feb 29 copies Feb 28
    feb28 = slice(58 * 24, 59 * 24)
    np.testing.assert_array_equal(out.values[59 * 24:60 * 24], one.values[feb28])
    np.testing.assert_array_equal(out.values[60 * 24:8784], one.values[59 * 24:])
    # 1981 begins right after the 8784 hours of 1980
    np.testing.assert_array_equal(out.values[8784:8784 + 8760], one.values)
    assert out.timestamps[0] == np.datetime64("1980-01-01T00:00:00")
    assert out.timestamps[-1] == np.datetime64("2022-12-31T23:00:00")


def test_replicate_rejects_partial_year():
    short = DemandSeries(np.ones(100), hourly_range("2022-01-01T00", 100))
    with pytest.raises(DataIntegrityError):
        replicate_demand_year(short, 1980, 1981)


def test_scale_to_capacity():
    p = _profile([0.0, 0.5, 1.0, 0.25])
    np.testing.assert_allclose(scale_to_capacity(p, 10.0), [0, 5, 10, 2.5])
    with pytest.raises(DataIntegrityError):
        scale_to_capacity(p, -1.0)


def test_dataset_roundtrip(tmp_path):
    ds = synthetic_dataset(200, seed=3)
    path = tmp_path / "d.csv"
    write_dataset(path, ds)
    back = read_dataset(path)
    np.testing.assert_array_equal(back.solar_cf, ds.solar_cf)
    np.testing.assert_array_equal(back.demand, ds.demand)
    np.testing.assert_array_equal(back.timestamps, ds.timestamps)
    assert back.content_hash() == ds.content_hash()


def test_dataset_validation(tmp_path):
    with pytest.raises(DataIntegrityError):
        GridDataset(np.array([0.1]), np.array([0.1]), np.array([0.0]))
    with pytest.raises(DataIntegrityError):
        GridDataset(np.array([0.1, 0.1]), np.array([0.1]), np.array([1.0, 1.0]))
    path = tmp_path / "d.csv"
    write_dataset(path, synthetic_dataset(5))
    lines = path.read_text().splitlines()
    lines[3] = lines[3].rsplit(",", 1)[0] + ",oops"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataIntegrityError, match=r"lines \[4\]"):
        read_dataset(path)
    with pytest.raises(FileNotFoundError):
        read_dataset(tmp_path / "missing.csv")


def test_build_demand_sums_countries_in_gw(tmp_path):
    from conftest import write_demand_file

    path = tmp_path / "demand.csv"
    write_demand_file(path, hours=8760, start="2022-01-01T00", gaps={("DE", 5)})
    d = build_demand(path)
    assert len(d) == 8760
    assert 80 < d.mean < 110  # two countries around 40 and 50 GW
    bad = tmp_path / "bad.csv"
    text = path.read_text().splitlines()
    text[7] = "2022-01-01T06:00:00Z,DE,-5"
    bad.write_text("\n".join(text) + "\n")
    with pytest.raises(DataIntegrityError, match=r"lines \[8\]"):
        build_demand(bad)


def test_synthetic_dataset_is_reproducible():
    a, b = synthetic_dataset(500, seed=1), synthetic_dataset(500, seed=1)
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != synthetic_dataset(500, seed=2).content_hash()
