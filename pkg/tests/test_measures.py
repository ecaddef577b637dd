import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pattern_retention.cart import mine_patterns
from pattern_retention.errors import DataError, MeasureError, SchemaMismatchError
from pattern_retention.measures import (
    ConfusionCounts,
    auc,
    chi2_distance,
    chi2_label_distance,
    confusion,
    evaluate,
    f_measure,
    pattern_accuracy,
    per_pattern_report,
    pld,
    prediction_accuracy,
    psd,
    rank_auc,
)
from pattern_retention.noise import UN, NoiseSpec, perturb
from pattern_retention.patterns import Condition, Pattern, PatternSet
from pattern_retention.synth import planted_dataset
from pattern_retention.tabular import CATEGORICAL, NUMERIC, Attribute, Dataset, Schema

XY = Schema((Attribute("x", NUMERIC), Attribute("Y", CATEGORICAL)), "Y")


def threshold_set(schema=XY, t=0.5, counts=({"n": 5, "p": 0}, {"n": 0, "p": 5})):
    return PatternSet((Pattern(0, (Condition("x", "le", t),), counts[0]),
                       Pattern(1, (Condition("x", "gt", t),), counts[1])),
                      schema.fingerprint(), "n", True)


def xy(rows):
    return Dataset.from_records(XY, rows)


def test_perfect_prediction_accuracy():
    d = xy([(0, "n"), (1, "p"), (0, "n")])
    assert prediction_accuracy(threshold_set(), d) == 1.0


def test_four_of_six_correct():
    d = xy([(0, "n"), (0, "n"), (1, "p"), (1, "p"), (0, "p"), (1, "n")])
    assert prediction_accuracy(threshold_set(), d) == pytest.approx(4 / 6)


def test_three_record_test_set_two_correct():
    t = xy([(0, "n"), (1, "p"), (1, "n")])
    assert prediction_accuracy(threshold_set(), t) == pytest.approx(0.67, abs=0.005)


def test_empty_evaluation_data_is_unconstructible():
    with pytest.raises(DataError):
        xy([])


def test_pattern_accuracy_identity_and_abs():
    d = xy([(0, "n"), (0, "n"), (1, "p"), (1, "p"), (0, "p")])
    assert pattern_accuracy(threshold_set(), d, d)[0] == 0.0
    better = d.replace(x=[0, 0, 1, 1, 1])  # the last record now matches its label
    eq1, a_dd, a_dm = pattern_accuracy(threshold_set(), d, better)
    assert (a_dd, a_dm) == (0.8, 1.0)
    assert eq1 == pytest.approx(0.2)


def test_pattern_accuracy_shape_checks():
    d = xy([(0, "n"), (1, "p")])
    with pytest.raises(SchemaMismatchError):
        pattern_accuracy(threshold_set(), d, xy([(0, "n")]))


def _support_fixture(d_supports, m_supports):
    """Two complementary patterns whose supports are as given."""
    n = sum(d_supports)
    d = xy([(0, "n")] * d_supports[0] + [(1, "p")] * d_supports[1])
    m = xy([(0, lab) for lab in d.labels[:m_supports[0]]] +
           [(1, lab) for lab in d.labels[m_supports[0]:]])
    assert len(m) == n
    return d, m


def test_psd_hand_values():
    d, m = _support_fixture((6, 4), (4, 6))
    # pattern 0: |6 - 4| = 2, pattern 1: |4 - 6| = 2
    assert psd(threshold_set(), d, m) == pytest.approx(4 / 20)
    zs = PatternSet((Pattern(0, (Condition("x", "le", 0.5),), {"n": 6}),
                     Pattern(1, (Condition("x", "gt", 5),), {"p": 4})), XY.fingerprint(), "n")
    d2 = xy([(0, "n")] * 6 + [(9, "p")] * 4)
    m2 = xy([(0, "n")] * 4 + [(3, "n")] * 2 + [(9, "p")] * 4)
    assert psd(zs, d2, m2) == 0.1
    assert psd(zs, d2, m2) == oracles.psd(zs.patterns, XY.names, d2.records(), m2.records())


def test_psd_upper_bound():
    d, m = _support_fixture((10, 0), (0, 10))
    assert psd(threshold_set(), d, m) == 1.0


def test_psd_dilution():
    d, m = _support_fixture((6, 4), (4, 6))
    base = threshold_set()
    extra = PatternSet(base.patterns + (Pattern(2, (Condition("x", "gt", 100),), {}),),
                       XY.fingerprint(), "n")
    assert psd(extra, d, m) < psd(base, d, m)


@pytest.mark.parametrize("fd, fm, expected", [
    ({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}, 0.0),
    ({"a": 1.0, "b": 0.0}, {"a": 0.0, "b": 1.0}, 1.0),
    ({"a": 0.8, "b": 0.2}, {"a": 0.6, "b": 0.4}, 0.5 * (0.04 / 1.4 + 0.04 / 0.6)),
])
def test_chi2_distance(fd, fm, expected):
    assert chi2_distance(fd, fm) == pytest.approx(expected, abs=1e-15)
    assert chi2_distance(fd, fm) == pytest.approx(oracles.chi2(fd, fm), abs=1e-15)


def test_chi2_spot_value():
    assert chi2_distance({"a": 0.8, "b": 0.2}, {"a": 0.6, "b": 0.4}) == pytest.approx(0.047619, abs=1e-6)


def test_chi2_vanished_pattern():
    d = xy([(0, "n"), (0, "p"), (1, "p")])
    m = xy([(1, "n"), (1, "p"), (1, "p")])
    p = Pattern(0, (Condition("x", "le", 0.5),), {})
    assert chi2_label_distance(p, d, m) == 0.5
    rows = per_pattern_report(threshold_set(), d, m)
    assert rows[0].support_m == 0 and rows[0].vanished and rows[0].chi2 == 0.5
    with pytest.raises(MeasureError):
        chi2_label_distance(Pattern(0, (Condition("x", "gt", 9),), {}), d, m)


def test_pld_filter_and_mean():
    d = xy([(0, "n")] * 10 + [(1, "p")] * 10 + [(2, "p")] * 3)
    m = d
    zs = PatternSet((Pattern(0, (Condition("x", "le", 0.5),), {}),
                     Pattern(1, (Condition("x", "gt", 0.5), Condition("x", "le", 1.5)), {}),
                     Pattern(2, (Condition("x", "gt", 1.5),), {})), XY.fingerprint(), "n", True)
    res = pld(zs, d, m)
    assert res.value == 0.0 and res.included_count == 2
    # move 5 records of pattern 0 into pattern 1 with their labels: only 0/1 included
    m2 = d.replace(x=[0] * 5 + [1] * 5 + [1] * 10 + [2] * 3)
    res2 = pld(zs, d, m2)
    f_m1 = {"n": 5 / 15, "p": 10 / 15}
    assert res2.value == pytest.approx((0.0 + oracles.chi2({"n": 0.0, "p": 1.0}, f_m1)) / 2)
    assert res2.raw == pytest.approx(res2.value * 2 / 3)
    with pytest.raises(MeasureError):
        pld(zs, d, m, min_support=50)


def test_pld_mean_of_two():
    d = xy([(0, "n")] * 8 + [(0, "p")] * 2 + [(1, "n")] * 5 + [(1, "p")] * 5)
    m = d.replace(x=[0] * 6 + [1] * 2 + [0] * 2 + [1] * 10)
    zs = threshold_set()
    fd0, fm0 = {"n": 0.8, "p": 0.2}, {"n": 6 / 8, "p": 2 / 8}
    fd1, fm1 = {"n": 0.5, "p": 0.5}, {"n": 7 / 12, "p": 5 / 12}
    expected = (oracles.chi2(fd0, fm0) + oracles.chi2(fd1, fm1)) / 2
    assert pld(zs, d, m).value == pytest.approx(expected, abs=1e-15)


def test_confusion_counts():
    zs = threshold_set()
    all_right = xy([(1, "p")] * 3 + [(0, "n")] * 2)
    assert confusion(zs, all_right, "p") == ConfusionCounts(3, 0, 2, 0, "p")
    everyone_positive = xy([(1, "p")] + [(1, "n")] * 4)
    c = confusion(zs, everyone_positive, "p")
    assert (c.tp, c.fp, c.tn, c.fn) == (1, 4, 0, 0)
    assert c.total == 5
    with pytest.raises(MeasureError):
        confusion(zs, all_right, "maybe")


def test_confusion_requires_binary():
    schema = Schema((Attribute("x", NUMERIC), Attribute("Y", CATEGORICAL)), "Y")
    d = Dataset.from_records(schema, [(0, "a"), (1, "b"), (2, "c")])
    zs = mine_patterns(d)
    with pytest.raises(MeasureError):
        confusion(zs, d, "a")


@pytest.mark.parametrize("c, expected", [
    (ConfusionCounts(5, 0, 5, 0, "p"), 1.0),
    (ConfusionCounts(2, 1, 0, 0, "p"), 0.8),
    (ConfusionCounts(0, 3, 2, 4, "p"), 0.0),
])
def test_f_measure(c, expected):
    assert f_measure(c) == expected


def test_f_beta():
    c = ConfusionCounts(2, 1, 0, 1, "p")
    p, r = 2 / 3, 2 / 3
    assert f_measure(c, beta=2) == pytest.approx(5 * p * r / (4 * p + r))


def test_rank_auc_cases():
    assert rank_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert rank_auc([0.3] * 5, [1, 0, 1, 0, 0]) == 0.5
    assert rank_auc([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0]) == 0.75
    assert oracles.pairwise_auc([0.9, 0.4], [0.6, 0.1]) == 0.75
    with pytest.raises(MeasureError):
        rank_auc([0.1, 0.2], [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=30))
def test_rank_auc_matches_pairs_and_is_monotone_invariant(pairs):
    scores = [s / 6 for s, _ in pairs]
    pos = [b for _, b in pairs]
    if all(pos) or not any(pos):
        return
    ref = oracles.pairwise_auc([s for s, b in zip(scores, pos) if b],
                               [s for s, b in zip(scores, pos) if not b])
    assert rank_auc(scores, pos) == pytest.approx(ref, abs=1e-12)
    warped = [np.exp(3 * s) + s ** 3 for s in scores]
    assert rank_auc(warped, pos) == pytest.approx(ref, abs=1e-12)


def test_auc_on_patterns():
    zs = threshold_set(counts=({"n": 4, "p": 1}, {"n": 1, "p": 4}))
    t = xy([(0, "n"), (0, "p"), (1, "p"), (1, "n"), (1, "p")])
    # scores: 0.2, 0.2, 0.8, 0.8, 0.8; positives at 0.2, 0.8, 0.8; negatives at 0.2, 0.8
    assert auc(zs, t, "p") == pytest.approx(oracles.pairwise_auc([0.2, 0.8, 0.8], [0.2, 0.8]))
    with pytest.raises(MeasureError):
        auc(zs, xy([(0, "n"), (1, "n")]), "p")


def test_chi2_label_permutation_symmetry():
    d = planted_dataset(400, seed=1)
    m = perturb(d, NoiseSpec(UN, 0.3, 4))
    zs = mine_patterns(d)
    swap = {"high": "low", "low": "high"}
    d2 = d.replace(income=[swap[y] for y in d.labels])
    m2 = m.replace(income=[swap[y] for y in m.labels])
    for p in zs:
        assert chi2_label_distance(p, d, m) == pytest.approx(chi2_label_distance(p, d2, m2), abs=1e-15)


def test_identity_gives_zero_everywhere():
    d = planted_dataset(300, seed=8)
    zs = mine_patterns(d)
    rep = evaluate(zs, d, d)
    assert rep.pattern_accuracy_eq1 == rep.psd == rep.pld == 0.0
    assert all(r.support_d == r.support_m and r.chi2 == 0.0 for r in rep.per_pattern)
    assert len(rep.per_pattern) == len(zs)


def test_evaluate_ranges_under_noise():
    d = planted_dataset(600, seed=3)
    t = planted_dataset(200, seed=4)
    zs = mine_patterns(d)
    for p in (0.1, 0.5, 1.0):
        m = perturb(d, NoiseSpec(UN, p, 1))
        rep = evaluate(zs, d, m, t, positive_label="high")
        for v in (rep.pattern_accuracy_eq1, rep.psd, rep.pld, rep.pld_raw, rep.prediction_accuracy,
                  rep.f_measure, rep.auc, rep.alpha_dd, rep.alpha_dm):
            assert 0.0 <= v <= 1.0
        assert all(r.chi2 is None or 0.0 <= r.chi2 <= 1.0 for r in rep.per_pattern)
        assert rep.to_json()["per_pattern"][0]["pattern_id"] == 0
