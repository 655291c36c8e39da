import numpy as np
import pytest

import oracles
from linkalloc.errors import InfeasibleError, InvalidInputError, SizeLimitError
from linkalloc.pairing import (
    PairingInstance,
    PairingMatrix,
    build_incidence,
    check_total_unimodularity,
    objective_value,
    pair_greedy,
    pair_optimal_lp,
    solve_joint_mmkp_bruteforce,
)
from linkalloc.rates import RateTensor


def _instance(d, caps, limits=None):
    d = np.asarray(d, dtype=float)
    if limits is None:
        limits = [1] * d.shape[1]
    return PairingInstance(d=d, ap_capacity=np.asarray(caps), sta_radio_limits=np.asarray(limits))


def test_incidence_single_edge():
    inc = build_incidence(1, 1)
    assert inc.sta_rows.tolist() == [[1]]
    assert inc.ap_rows.tolist() == [[1]]


def test_incidence_two_by_two_pattern():
    inc = build_incidence(2, 2)
    assert inc.sta_rows.tolist() == [[1, 1, 0, 0], [0, 0, 1, 1]]
    assert inc.ap_rows.tolist() == [[1, 0, 1, 0], [0, 1, 0, 1]]


def test_incidence_ap_major_transposes_roles():
    inc = build_incidence(2, 2, edge_order="ap_major")
    assert inc.ap_rows.tolist() == [[1, 1, 0, 0], [0, 0, 1, 1]]
    assert inc.sta_rows.tolist() == [[1, 0, 1, 0], [0, 1, 0, 1]]


def test_incidence_columns_sum_to_two():
    for n, m in ((1, 1), (2, 3), (4, 5), (6, 6)):
        inc = build_incidence(n, m)
        assert (inc.stacked.sum(axis=0) == 2).all()
        assert inc.stacked.shape == (n + m, n * m)


def test_tu_holds_for_incidence():
    res = check_total_unimodularity(build_incidence(3, 5).stacked, max_submatrix=5)
    assert bool(res) is True
    assert res.witness_rows == ()


def test_tu_fails_on_known_counterexample():
    mat = np.array([[1, 1], [1, -1]])
    res = check_total_unimodularity(mat, max_submatrix=2)
    assert bool(res) is False
    assert sorted(res.witness_rows) == [0, 1]
    assert sorted(res.witness_cols) == [0, 1]
    assert abs(res.witness_det) == pytest.approx(2.0)


def test_tu_identity_always_passes():
    for k in (1, 4, 7):
        assert bool(check_total_unimodularity(np.eye(k, dtype=int), max_submatrix=5))


def test_tu_rejects_entries_outside_unit_range():
    with pytest.raises(InvalidInputError):
        check_total_unimodularity(np.array([[2, 0], [0, 1]]), max_submatrix=2)


def test_tu_agrees_with_direct_enumeration():
    rng = np.random.default_rng(21)
    for _ in range(40):
        mat = rng.integers(-1, 2, size=(4, 4))
        got = bool(check_total_unimodularity(mat, max_submatrix=4))
        want = oracles.tu_by_direct_enumeration(mat, max_k=4)
        assert got == want


def test_greedy_forced_assignment():
    x = pair_greedy(_instance([[5.0]], [1]))
    assert x.x.tolist() == [[1]]


def test_greedy_suboptimal_exhibit():
    inst = _instance([[9.0, 8.0], [7.0, 1.0]], [1, 1])
    greedy = pair_greedy(inst)
    assert greedy.x.tolist() == [[1, 0], [0, 1]]
    assert objective_value(greedy, inst.d) == 10.0
    best = pair_optimal_lp(inst)
    assert best.x.tolist() == [[0, 1], [1, 0]]
    assert objective_value(best, inst.d) == 15.0


def test_greedy_tie_break_low_index_first():
    inst = _instance([[2.0, 2.0], [2.0, 2.0]], [1, 1])
    x = pair_greedy(inst)
    assert x.x.tolist() == [[1, 0], [0, 1]]


def test_greedy_reports_unserved_on_infeasible():
    inst = _instance([[1.0, 2.0, 3.0]], [2], limits=[1, 1, 1])
    with pytest.raises(InfeasibleError) as exc:
        pair_greedy(inst)
    assert "sta" in str(exc.value).lower() or "2" in str(exc.value)


def test_lp_argmax_when_one_ap_has_slack():
    rng = np.random.default_rng(4)
    d = rng.uniform(0, 1, size=(3, 6))
    d[1] += 5.0  # AP 1 dominates every column
    inst = _instance(d, [6, 6, 6])
    x = pair_optimal_lp(inst)
    for m in range(6):
        assert x.ap_of(m) == 1


def test_lp_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 11))
        caps = rng.integers(1, 5, size=n)
        while caps.sum() < m:
            caps[rng.integers(n)] += 1
        d = rng.uniform(0, 100, size=(n, m))
        inst = _instance(d, caps)
        x = pair_optimal_lp(inst)
        assert set(np.unique(x.x)) <= {0, 1}
        got = objective_value(x, d)
        want = oracles.best_assignment_value(d, caps)
        assert got == pytest.approx(want, rel=1e-9)
        assert (x.x.sum(axis=0) == 1).all()
        assert (x.x.sum(axis=1) <= caps).all()


def test_lp_dominates_greedy_everywhere():
    rng = np.random.default_rng(23)
    for _ in range(60):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 8))
        caps = rng.integers(1, 4, size=n)
        while caps.sum() < m:
            caps[rng.integers(n)] += 1
        d = rng.uniform(0, 10, size=(n, m))
        inst = _instance(d, caps)
        lp = objective_value(pair_optimal_lp(inst), d)
        greedy = objective_value(pair_greedy(inst), d)
        assert lp >= greedy - 1e-9
        assert greedy >= 0.0


def test_lp_scale_invariance():
    rng = np.random.default_rng(29)
    d = rng.uniform(0, 5, size=(3, 7))
    inst = _instance(d, [3, 3, 3])
    base = pair_optimal_lp(inst).pairs()
    for scale in (1e-6, 3.0, 1e6):
        scaled = pair_optimal_lp(_instance(d * scale, [3, 3, 3])).pairs()
        assert scaled == base


def test_lp_infeasible_capacity():
    with pytest.raises(InfeasibleError):
        pair_optimal_lp(_instance([[1.0, 1.0]], [1], limits=[1, 1]))


def test_instance_validation():
    with pytest.raises(InvalidInputError):
        _instance([[-1.0]], [1])
    with pytest.raises(InvalidInputError):
        _instance([[np.inf]], [1])
    with pytest.raises(InvalidInputError):
        _instance([[1.0]], [0])


def test_pairing_matrix_rejects_shared_sta():
    with pytest.raises(InvalidInputError):
        PairingMatrix(x=np.array([[1, 0], [1, 0]]))


def test_mmkp_single_cell():
    tensor = RateTensor(values=np.array([[[10.0]]]))
    sol = solve_joint_mmkp_bruteforce(tensor, _instance([[10.0]], [1]))
    assert sol.objective == 10.0
    assert sol.selection.tolist() == [[[1]]]


def test_mmkp_all_zero_tensor():
    tensor = RateTensor(values=np.zeros((2, 2, 2)))
    sol = solve_joint_mmkp_bruteforce(tensor, _instance(np.zeros((2, 2)), [2, 2], limits=[2, 2]))
    assert sol.objective == 0.0


def test_mmkp_matches_exhaustive_oracle():
    rng = np.random.default_rng(31)
    for _ in range(30):
        f, n, m = 2, 2, 2
        vals = rng.uniform(0, 100, size=(f, n, m))
        caps = rng.integers(1, 4, size=n)
        limits = rng.integers(1, 3, size=m)
        inst = _instance(vals.mean(axis=0), caps, limits=limits)
        sol = solve_joint_mmkp_bruteforce(RateTensor(values=vals), inst)
        want = oracles.exhaustive_mmkp_value(vals, caps, limits)
        assert sol.objective == pytest.approx(want, rel=1e-12)


def test_mmkp_selection_is_feasible():
    rng = np.random.default_rng(37)
    vals = rng.uniform(0, 10, size=(3, 2, 3))
    caps = np.array([2, 2])
    limits = np.array([2, 1, 2])
    sol = solve_joint_mmkp_bruteforce(RateTensor(values=vals), _instance(vals.mean(axis=0), caps, limits=limits))
    s = sol.selection
    per_pair = s.sum(axis=0)
    assert ((per_pair > 0).sum(axis=0) <= 1).all()          # one AP per STA
    assert (per_pair.sum(axis=0) <= limits).all()           # radio limits
    assert (per_pair.sum(axis=1) <= caps).all()             # AP capacity


def test_mmkp_size_guard():
    vals = np.zeros((1, 5, 4))
    inst = _instance(np.zeros((5, 4)), [4] * 5, limits=[1] * 4)
    with pytest.raises(SizeLimitError):
        solve_joint_mmkp_bruteforce(RateTensor(values=vals), inst)
    wide = np.zeros((4, 1, 2))
    with pytest.raises(SizeLimitError):
        solve_joint_mmkp_bruteforce(RateTensor(values=wide), _instance(np.zeros((1, 2)), [2], limits=[1, 1]))


def test_objective_zero_matrix():
    x = PairingMatrix(x=np.zeros((2, 2), dtype=int))
    assert objective_value(x, np.array([[9.0, 8.0], [7.0, 1.0]])) == 0.0


def test_objective_hand_value():
    x = PairingMatrix(x=np.array([[0, 1], [1, 0]]))
    assert objective_value(x, np.array([[9.0, 8.0], [7.0, 1.0]])) == 15.0


def test_objective_equals_trace_form():
    rng = np.random.default_rng(41)
    d = rng.uniform(0, 1, size=(3, 4))
    x = PairingMatrix(x=np.array([[1, 0, 0, 0], [0, 1, 0, 1], [0, 0, 1, 0]]))
    assert objective_value(x, d) == pytest.approx(float(np.trace(x.x.T @ d)))


def test_objective_shape_mismatch():
    x = PairingMatrix(x=np.array([[1]]))
    with pytest.raises(InvalidInputError):
        objective_value(x, np.zeros((2, 2)))
