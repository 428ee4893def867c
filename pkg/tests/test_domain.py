import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from warehouse_layout.domain import (
    BadDistribution,
    ConfigError,
    DuplicateCell,
    Layout,
    LayoutError,
    NonPositiveCount,
    OutOfBoundsCell,
    WarehouseConfig,
    all_layouts,
    encode_layout,
    encode_many,
    layout_space_size,
    load_config,
    sample_destination,
    save_config,
    validate_config,
)


def make(**kw):
    base = dict(h=20, w=20, sources=((1, 1),), holes=((5, 5),), n_r=1, n_d=1, p=(1.0,), T=10)
    base.update(kw)
    return WarehouseConfig(**base)


def test_full_size_config_validates(large):
    assert (large.h, large.w, large.n_s, large.n_h, large.n_r, large.n_d, large.T) == (20, 20, 12, 20, 60, 5, 1000)
    assert large.p == (0.367, 0.267, 0.2, 0.133, 0.033)
    validate_config(large)


def test_bad_distribution_sum():
    with pytest.raises(BadDistribution):
        validate_config(make(n_d=2, p=(0.5, 0.6)))


def test_negative_proportion():
    with pytest.raises(BadDistribution):
        validate_config(make(n_d=2, p=(1.5, -0.5)))


def test_distribution_length_must_match():
    with pytest.raises(BadDistribution):
        validate_config(make(n_d=2, p=(1.0,)))


def test_out_of_bounds_hole():
    with pytest.raises(OutOfBoundsCell):
        validate_config(make(holes=((0, 5),)))


def test_duplicate_and_overlapping_cells():
    with pytest.raises(DuplicateCell):
        validate_config(make(holes=((5, 5), (5, 5))))
    with pytest.raises(DuplicateCell):
        validate_config(make(sources=((5, 5),)))


@pytest.mark.parametrize("field", ["n_r", "n_d", "T"])
def test_non_positive_counts(field):
    kw = {field: 0}
    if field == "n_d":
        kw["p"] = ()
    with pytest.raises(NonPositiveCount):
        validate_config(make(**kw))


def test_empty_hole_list():
    with pytest.raises(NonPositiveCount):
        validate_config(make(holes=()))


def test_error_kinds_are_distinct():
    kinds = {BadDistribution, OutOfBoundsCell, DuplicateCell, NonPositiveCount}
    assert len(kinds) == 4 and all(issubclass(k, ConfigError) for k in kinds)


def test_config_json_round_trip(tmp_path, desk):
    path = tmp_path / "cfg.json"
    save_config(desk, path)
    assert load_config(path) == desk
    assert load_config(path).digest() == desk.digest()


def test_config_rejects_inconsistent_counts(tmp_path, desk):
    d = desk.to_dict()
    d["n_h"] = 99
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ConfigError):
        load_config(path)


def test_degenerate_distribution_always_one():
    rng = np.random.default_rng(1)
    assert all(sample_destination((1.0,), rng) == 1 for _ in range(100))


def test_sample_destination_consumes_one_draw():
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    sample_destination((0.2, 0.3, 0.5), a)
    b.random()
    assert a.random() == b.random()


def test_sample_destination_replays():
    r1 = np.random.default_rng(42)
    r2 = np.random.default_rng(42)
    assert [sample_destination((0.5, 0.5), r1) for _ in range(200)] == [
        sample_destination((0.5, 0.5), r2) for _ in range(200)
    ]


def test_sample_destination_frequencies_and_chi_square():
    p = (0.367, 0.267, 0.2, 0.133, 0.033)
    rng = np.random.default_rng(2024)
    n = 10**6
    counts = np.bincount([sample_destination(p, rng) for _ in range(n)], minlength=6)[1:]
    freq = counts / n
    assert np.all(np.abs(freq - p) <= 0.005)
    expected = np.asarray(p) * n
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < chi2.ppf(0.999, df=len(p) - 1)


@pytest.mark.parametrize(
    "theta,n_d,expected",
    [((1,), 1, (1,)), ((2, 1), 2, (0, 1, 1, 0)), ((1, 1, 1), 2, (1, 0, 1, 0, 1, 0))],
)
def test_encode_examples(theta, n_d, expected):
    assert tuple(encode_layout(Layout(theta), n_d).tolist()) == expected


def test_encode_is_injective():
    codes = {tuple(encode_layout(l, 3).tolist()) for l in all_layouts(4, 3)}
    assert len(codes) == 81


@given(st.lists(st.integers(1, 4), min_size=1, max_size=12))
def test_encoding_one_hot_positions(theta):
    x = encode_layout(Layout(tuple(theta)), 4)
    assert x.sum() == len(theta)
    for i, t in enumerate(theta):
        assert x[i * 4 + t - 1] == 1


def test_encode_many_matches_single():
    ls = all_layouts(3, 2)
    X = encode_many(ls, 2)
    assert np.array_equal(X, np.stack([encode_layout(l, 2) for l in ls]))


def test_space_size_examples():
    assert layout_space_size(20, 5) == 95_367_431_640_625
    assert layout_space_size(1, 7) == 7
    assert layout_space_size(4, 2) == 16


@settings(max_examples=50)
@given(st.integers(2, 60), st.integers(1, 9))
def test_space_size_recursion(n_h, n_d):
    assert layout_space_size(n_h, n_d) == n_d * layout_space_size(n_h - 1, n_d)


def test_all_layouts_enumerates_space():
    ls = all_layouts(4, 2)
    assert len(ls) == 16 and len(set(ls)) == 16


def test_layout_parse_and_validate(desk):
    l = Layout.parse("1, 2,3,1,2,3,1,2")
    assert str(l) == "1,2,3,1,2,3,1,2"
    l.validate(desk)
    with pytest.raises(LayoutError):
        Layout((1, 2)).validate(desk)
    with pytest.raises(LayoutError):
        Layout((4,) * 8).validate(desk)
