import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import quantile_by_counting
from trca.errors import ConfigError, DimensionError, ParseError
from trca.timeseries import (
    SHRINK,
    BinaryPanel,
    ThresholdSpec,
    TimeSeriesPanel,
    binarize,
    load_panel,
    normalize,
    quantile_threshold,
    save_panel,
    select_thresholds,
    shift_thresholds,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def panels(max_d=3, max_t=30):
    return st.integers(1, max_d).flatmap(
        lambda d: st.integers(1, max_t).flatmap(
            lambda t: arrays(float, (d, t), elements=finite)))


# -- loading -----------------------------------------------------------------

def test_load_three_column_csv(panel_csv):
    path = panel_csv("t,X,Y\n0,0.1,0.2\n1,0.3,0.4\n2,0.5,0.6\n3,0.7,0.8\n")
    panel = load_panel(path)
    assert (panel.d, panel.T) == (2, 4)
    assert panel.names == ("X", "Y")
    np.testing.assert_array_equal(panel.series("Y"), [0.2, 0.4, 0.6, 0.8])
    np.testing.assert_array_equal(panel.time_index(), [0, 1, 2, 3])


def test_load_without_time_column(panel_csv):
    panel = load_panel(panel_csv("A,B\n1,2\n3,4\n"))
    assert panel.names == ("A", "B")
    assert panel.timestamps is None


def test_header_only_is_rejected(panel_csv):
    with pytest.raises(DimensionError, match="T must be ≥ 1"):
        load_panel(panel_csv("t,X,Y\n"))


def test_duplicate_series_name(panel_csv):
    with pytest.raises(ParseError, match="duplicate series name"):
        load_panel(panel_csv("t,X,X\n0,1,2\n"))


def test_ragged_row(panel_csv):
    with pytest.raises(DimensionError, match="row 3"):
        load_panel(panel_csv("t,X,Y\n0,1,2\n1,3\n"))


def test_non_numeric_cell_reports_position(panel_csv):
    with pytest.raises(ParseError) as err:
        load_panel(panel_csv("t,X,Y\n0,1,2\n1,3,abc\n"))
    assert err.value.row == 3 and err.value.column == 3


def test_missing_cell_is_an_error(panel_csv):
    with pytest.raises(ParseError, match="missing value"):
        load_panel(panel_csv("t,X,Y\n0,1,\n"))


def test_unknown_format(panel_csv):
    with pytest.raises(ConfigError):
        load_panel(panel_csv("X\n1\n"), format="long-csv")


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    panel = TimeSeriesPanel(("a", "b"), rng.normal(size=(2, 7)), np.arange(10, 17))
    save_panel(panel, tmp_path / "p.csv")
    assert load_panel(tmp_path / "p.csv") == panel


def test_panel_arrays_are_read_only():
    panel = TimeSeriesPanel(("a",), [[1.0, 2.0]])
    with pytest.raises(ValueError):
        panel.values[0, 0] = 5.0


# -- normalize ---------------------------------------------------------------

def test_normalize_affine_example():
    out = normalize(TimeSeriesPanel(("x",), [[2.0, 4.0, 6.0]]))
    s = 1.0 - SHRINK
    np.testing.assert_array_equal(out.values[0], [0.0, 0.5 * s, 1.0 * s])
    assert out.values[0].argmax() == 2


def test_normalize_constant_series():
    out = normalize(TimeSeriesPanel(("x",), [[5.0, 5.0, 5.0]]))
    np.testing.assert_array_equal(out.values[0], [0.0, 0.0, 0.0])


def test_normalize_matches_scalar_reference():
    rng = np.random.default_rng(0)
    raw = rng.uniform(0.0, 1.0, size=(3, 50))
    out = normalize(TimeSeriesPanel(("a", "b", "c"), raw))
    for i in range(3):
        lo, hi = min(raw[i]), max(raw[i])
        expected = [(v - lo) / (hi - lo) * (1.0 - SHRINK) for v in raw[i]]
        np.testing.assert_allclose(out.values[i], expected, rtol=0, atol=1e-15)


@given(panels())
def test_normalize_range_order_and_idempotence(values):
    panel = TimeSeriesPanel(tuple(f"s{i}" for i in range(values.shape[0])), values)
    once = normalize(panel)
    assert once.values.min() >= 0.0
    assert once.values.max() < 1.0
    for i in range(panel.d):
        # order statistics are preserved (ties may only appear where values tie)
        order = np.argsort(values[i], kind="stable")
        assert np.all(np.diff(once.values[i][order]) >= 0)
    assert normalize(once) == once


def test_normalize_with_reference_clips():
    ref = TimeSeriesPanel(("x",), [[0.0, 10.0]])
    out = normalize(TimeSeriesPanel(("x",), [[-5.0, 5.0, 20.0]]), reference=ref)
    np.testing.assert_array_equal(out.values[0], [0.0, 0.5 * (1 - SHRINK), 1 - SHRINK])


# -- thresholds --------------------------------------------------------------

def test_quantile_on_hundredths():
    rng = np.random.default_rng(7)
    series = rng.permutation(np.round(np.arange(100) / 100, 2))
    r = quantile_threshold(series, 0.9)
    assert r == pytest.approx(0.90)
    assert int(np.sum(series >= r)) == 10


def test_quantile_two_point_series():
    assert quantile_threshold(np.array([0.2, 0.8]), 0.5) == 0.8


def test_constant_series_binarizes_to_ones():
    panel = TimeSeriesPanel(("x",), [[0.4, 0.4, 0.4]])
    spec = select_thresholds(panel, 0.9)
    assert spec["x"] == 0.4
    assert spec.provenance["x"] == "quantile(0.9)"
    assert binarize(panel, spec).bits.tolist() == [[1, 1, 1]]


@given(st.lists(st.integers(0, 20), min_size=1, max_size=60), st.floats(0.01, 0.99))
def test_quantile_matches_counting_oracle(ints, p):
    values = np.array(ints, dtype=float) / 20
    assert quantile_threshold(values, p) == quantile_by_counting(values, p)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=80, unique=True), st.floats(0.01, 0.99))
def test_quantile_count_identity(values, p):
    values = np.array(values)
    r = quantile_threshold(values, p)
    below = int(np.sum(values < r))
    k = min(int(np.floor(p * len(values) + 1e-9)), len(values) - 1)
    assert below == k
    assert below >= np.floor(p * len(values)) - 1


def test_select_thresholds_rejects_bad_proportion():
    panel = TimeSeriesPanel(("x",), [[0.1, 0.2]])
    for p in (0.0, 1.0, 1.5):
        with pytest.raises(ConfigError):
            select_thresholds(panel, p)


def test_threshold_spec_validation_and_toml():
    with pytest.raises(ConfigError):
        ThresholdSpec.fixed({"x": 1.5})
    spec = ThresholdSpec.fixed({"b": 0.25, "a": 0.5, 'q"x': 0.1})
    assert spec.to_toml() == '"a" = 0.5\n"b" = 0.25\n"q\\"x" = 0.1\n'


def test_shift_thresholds_clamps_and_flags():
    spec, clamped = shift_thresholds(ThresholdSpec.fixed({"a": 0.95, "b": 0.5}), 0.1)
    assert spec["a"] == 1.0 and spec["b"] == pytest.approx(0.6)
    assert clamped == ["a"]


# -- binarize ----------------------------------------------------------------

def test_binarize_example():
    panel = TimeSeriesPanel(("x",), [[0.1, 0.8, 0.9]])
    assert binarize(panel, ThresholdSpec.fixed({"x": 0.7})).bits.tolist() == [[0, 1, 1]]


def test_zero_threshold_gives_all_ones():
    panel = TimeSeriesPanel(("x",), [[0.0, 0.3, 0.99]])
    assert binarize(panel, ThresholdSpec.fixed({"x": 0.0})).bits.tolist() == [[1, 1, 1]]


def test_binarize_missing_threshold():
    panel = TimeSeriesPanel(("x", "y"), [[0.1], [0.2]])
    with pytest.raises(ConfigError, match="y"):
        binarize(panel, ThresholdSpec.fixed({"x": 0.5}))


def test_raising_threshold_never_creates_ones():
    rng = np.random.default_rng(11)
    for _ in range(50):
        panel = TimeSeriesPanel(("a", "b"), rng.uniform(size=(2, 40)))
        low = binarize(panel, ThresholdSpec.fixed({"a": 0.7, "b": 0.7}))
        high = binarize(panel, ThresholdSpec.fixed({"a": 0.9, "b": 0.9}))
        assert np.all(high.bits <= low.bits)


@given(arrays(float, (2, 25), elements=st.floats(0, 1)),
       st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_binarize_monotone_and_deterministic(values, r1, r2, r3, r4):
    panel = TimeSeriesPanel(("a", "b"), values)
    lo = ThresholdSpec.fixed({"a": min(r1, r2), "b": min(r3, r4)})
    hi = ThresholdSpec.fixed({"a": max(r1, r2), "b": max(r3, r4)})
    assert np.all(binarize(panel, hi).bits <= binarize(panel, lo).bits)
    assert binarize(panel, lo) == binarize(panel, lo)
    np.testing.assert_array_equal(binarize(panel, lo).bits, values >= lo.vector(("a", "b"))[:, None])


def test_binary_panel_rejects_non_binary():
    with pytest.raises(ParseError):
        BinaryPanel(("x",), [[0, 2]])
