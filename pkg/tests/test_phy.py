import numpy as np
import pytest

import oracles
from linkalloc.errors import InvalidInputError
from linkalloc.phy import (
    DATA_SUBCARRIERS,
    DEFAULT_PER_MIDPOINT_DB,
    EesmParams,
    McsEntry,
    PerCurve,
    SinrComponents,
    SubcarrierSinrGrid,
    db_to_linear,
    default_per_curve,
    eesm_effective_snr,
    linear_to_db,
    mcs_data_rate,
    mcs_entry,
    per_lookup,
    sinr,
)


def test_sinr_unit_ratio():
    assert sinr(SinrComponents(signal=1.0, inter_stream_interference=0.0, noise=1.0)) == 1.0


def test_sinr_exact_arithmetic():
    assert sinr(SinrComponents(signal=10.0, inter_stream_interference=4.0, noise=1.0)) == 2.0


def test_sinr_zero_signal():
    assert sinr(SinrComponents(signal=0.0, inter_stream_interference=0.0, noise=1.0)) == 0.0


def test_sinr_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        SinrComponents(signal=-1.0, inter_stream_interference=0.0, noise=1.0)
    with pytest.raises(InvalidInputError):
        SinrComponents(signal=1.0, inter_stream_interference=0.0, noise=0.0)
    with pytest.raises(InvalidInputError):
        SinrComponents(signal=float("nan"), inter_stream_interference=0.0, noise=1.0)


def test_db_round_trip():
    for x in (0.01, 1.0, 3.0, 250.0):
        assert linear_to_db(db_to_linear(linear_to_db(x))) == pytest.approx(linear_to_db(x))


def test_eesm_uniform_grid_is_fixed_point():
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = float(rng.uniform(0.05, 40.0))
        beta = float(rng.uniform(0.1, 10.0))
        grid = SubcarrierSinrGrid.uniform(c, n_sc=int(rng.integers(1, 9)), n_ss=int(rng.integers(1, 3)))
        got = eesm_effective_snr(grid, EesmParams(beta=beta))
        assert abs(got - c) <= 1e-12 * c


def test_eesm_two_point_grid_frozen():
    grid = SubcarrierSinrGrid(values=np.array([[1.0, 3.0]]))
    got = eesm_effective_snr(grid, EesmParams(beta=1.0))
    assert got == pytest.approx(1.5662191695169727, rel=1e-12)
    assert got == pytest.approx(oracles.eesm_scalar([1.0, 3.0], 1.0), rel=1e-12)


def test_eesm_large_beta_approaches_arithmetic_mean():
    grid = SubcarrierSinrGrid(values=np.array([[1.0, 3.0]]))
    got = eesm_effective_snr(grid, EesmParams(beta=1e6))
    assert abs(got - 2.0) < 1e-3


def test_eesm_bounds_and_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        vals = rng.uniform(0.01, 30.0, size=(int(rng.integers(1, 5)), int(rng.integers(1, 7))))
        beta = float(rng.uniform(0.2, 5.0))
        grid = SubcarrierSinrGrid(values=vals)
        eff = eesm_effective_snr(grid, EesmParams(beta=beta))
        assert vals.min() - 1e-12 <= eff <= vals.max() + 1e-12
        bumped = vals.copy()
        i = int(rng.integers(vals.shape[0]))
        j = int(rng.integers(vals.shape[1]))
        bumped[i, j] += float(rng.uniform(0.1, 5.0))
        eff2 = eesm_effective_snr(SubcarrierSinrGrid(values=bumped), EesmParams(beta=beta))
        assert eff2 >= eff - 1e-12


def test_eesm_rejects_empty_grid():
    with pytest.raises(InvalidInputError):
        SubcarrierSinrGrid(values=np.zeros((0, 1)))
    with pytest.raises(InvalidInputError):
        EesmParams(beta=0.0)


def test_per_lookup_table_point_identity():
    curve = PerCurve.from_points(3, [0.0, 5.0, 10.0], [1.0, 0.5, 0.0])
    assert per_lookup(curve, 5.0) == 0.5
    assert per_lookup(curve, 0.0) == 1.0


def test_per_lookup_clamps_outside_range():
    curve = PerCurve.from_points(3, [0.0, 10.0], [0.9, 0.1])
    assert per_lookup(curve, -25.0) == 0.9
    assert per_lookup(curve, 99.0) == 0.1


def test_per_lookup_logistic_midpoint():
    curve = PerCurve(mcs_index=0, midpoint_db=10.0, slope_per_db=1.0)
    assert per_lookup(curve, 10.0) == pytest.approx(0.5)


def test_per_lookup_interpolates_linearly():
    curve = PerCurve.from_points(1, [0.0, 10.0], [0.8, 0.2])
    assert per_lookup(curve, 2.5) == pytest.approx(0.65)


def test_per_curve_monotone_nonincreasing_everywhere():
    rng = np.random.default_rng(11)
    curves = [default_per_curve(m) for m in range(12)]
    curves.append(PerCurve.from_points(0, [-5.0, 0.0, 3.0, 9.0], [1.0, 0.7, 0.7, 0.0]))
    for curve in curves:
        q = np.sort(rng.uniform(-40.0, 60.0, size=64))
        pers = [per_lookup(curve, float(x)) for x in q]
        assert all(0.0 <= p <= 1.0 for p in pers)
        assert all(a >= b - 1e-12 for a, b in zip(pers, pers[1:]))


def test_per_curve_validation():
    with pytest.raises(InvalidInputError):
        PerCurve.from_points(0, [0.0, 0.0], [0.5, 0.4])  # not strictly increasing x
    with pytest.raises(InvalidInputError):
        PerCurve.from_points(0, [0.0, 5.0], [0.2, 0.6])  # per increases
    with pytest.raises(InvalidInputError):
        PerCurve.from_points(0, [0.0, 5.0], [1.4, 0.0])  # per out of [0,1]


def test_per_curve_from_csv(tmp_path):
    p = tmp_path / "mcs3.csv"
    p.write_text("esnr_db,per\n0.0,1.0\n10.0,0.5\n20.0,0.0\n")
    curve = PerCurve.from_csv(3, p)
    assert curve.is_tabulated
    assert per_lookup(curve, 10.0) == 0.5


def test_default_per_curve_midpoints():
    for m, mid in DEFAULT_PER_MIDPOINT_DB.items():
        assert per_lookup(default_per_curve(m), float(mid)) == pytest.approx(0.5)


def test_mcs3_rates_match_handbook_values():
    e40 = mcs_entry(3, 40)
    e80 = mcs_entry(3, 80)
    assert mcs_data_rate(e40) == pytest.approx(68823529.41176471)
    assert mcs_data_rate(e80) == pytest.approx(144117647.05882356)
    # three significant figures: 68.8 / 144.1 Mbps
    assert round(mcs_data_rate(e40) / 1e6, 1) == 68.8
    assert round(mcs_data_rate(e80) / 1e6, 1) == 144.1


def test_mcs_data_rate_unit_case():
    entry = McsEntry(mcs_index=0, n_sd=1, n_bpscs=1, coding_rate=1.0, t_dft=1.0, t_gi=0.0)
    assert mcs_data_rate(entry) == 1.0


def test_mcs_data_rate_scaling():
    base = mcs_entry(3, 40)
    assert mcs_data_rate(base, n_streams=2) == pytest.approx(2 * mcs_data_rate(base))
    wider = mcs_entry(3, 80)
    assert mcs_data_rate(wider) / mcs_data_rate(base) == pytest.approx(DATA_SUBCARRIERS[80] / DATA_SUBCARRIERS[40])
    slow = McsEntry(mcs_index=3, n_sd=468, n_bpscs=4, coding_rate=0.5, t_dft=25.6e-6, t_gi=1.6e-6)
    assert mcs_data_rate(slow) == pytest.approx(mcs_data_rate(base) / 2)


def test_mcs_entry_rejects_unknown_combinations():
    with pytest.raises(InvalidInputError):
        mcs_entry(12, 40)
    with pytest.raises(InvalidInputError):
        mcs_entry(3, 30)
    with pytest.raises(InvalidInputError):
        McsEntry(mcs_index=0, n_sd=10, n_bpscs=3, coding_rate=0.5, t_dft=1.0, t_gi=0.0)
