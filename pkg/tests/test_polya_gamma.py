import numpy as np
import pytest
from scipy import stats

from bibt.polya_gamma import pg_draw, pg_draw_many, pg_mean, pg_var


def series_oracle(b, c, size, rng, terms=200):
    """PG(b, c) through its infinite weighted sum of Gamma(b, 1) variables.

    The sum is cut at ``terms`` and the remainder replaced by its mean,
    which leaves a tail variance below 1e-7 of the total.
    """
    k = np.arange(1, terms + 1)
    denom = (k - 0.5) ** 2 + c**2 / (4 * np.pi**2)
    g = rng.gamma(b, 1.0, size=(size, terms))
    head = (g / denom).sum(axis=1) / (2 * np.pi**2)
    tail_mean = pg_mean(b, c) - b * (1.0 / denom).sum() / (2 * np.pi**2)
    return head + tail_mean


def test_b_zero_is_point_mass():
    rng = np.random.default_rng(0)
    assert pg_draw(0, 3.7, rng) == 0.0
    assert np.all(pg_draw(0, -1.0, rng, size=10) == 0.0)
    np.testing.assert_array_equal(pg_draw_many([0, 0], [1.0, -2.0], rng), [0.0, 0.0])


@pytest.mark.parametrize("b,c,expected", [(1, 0, 0.25), (4, 0, 1.0)])
def test_mean_closed_form_limits(b, c, expected):
    assert pg_mean(b, c) == pytest.approx(expected, rel=1e-12)


def test_mean_even_in_c():
    assert pg_mean(1, -3.0) == pg_mean(1, 3.0)
    assert pg_var(2, -1.5) == pg_var(2, 1.5)


def test_mean_continuous_at_zero():
    assert pg_mean(1, 1e-7) == pytest.approx(0.25, rel=1e-10)
    assert pg_mean(1, 2e-6) == pytest.approx(pg_mean(1, 1e-6), rel=1e-9)
    assert pg_var(1, 2e-3) == pytest.approx(1 / 24, rel=1e-5)


def test_series_oracle_moments():
    rng = np.random.default_rng(11)
    x = series_oracle(2, 1.0, 100_000, rng)
    se = x.std() / np.sqrt(x.size)
    assert abs(x.mean() - np.tanh(0.5)) < 3 * se


@pytest.mark.parametrize("b,c,target", [(1, 0.0, 0.25), (2, 1.0, np.tanh(0.5))])
def test_sample_mean(b, c, target):
    rng = np.random.default_rng(2024)
    x = pg_draw(b, c, rng, size=100_000)
    assert np.all(x > 0)
    assert abs(x.mean() - target) < 3 * x.std(ddof=1) / np.sqrt(x.size)


@pytest.mark.parametrize("b,c", [(1, 0.0), (1, 1.3), (3, 4.0), (1, 25.0)])
def test_matches_series_oracle(b, c):
    rng = np.random.default_rng(5)
    ours = pg_draw(b, c, rng, size=50_000)
    oracle = series_oracle(b, c, 50_000, rng)
    assert stats.ks_2samp(ours, oracle).pvalue > 0.01


def test_draw_many_matches_per_edge_moments():
    rng = np.random.default_rng(3)
    b = np.array([1, 5, 20, 0])
    c = np.array([0.3, -2.0, 1.0, 4.0])
    draws = np.array([pg_draw_many(b, c, rng) for _ in range(20_000)])
    np.testing.assert_array_equal(draws[:, 3], 0.0)
    se = draws[:, :3].std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(draws[:, :3].mean(axis=0) - pg_mean(b[:3], c[:3])) < 4 * se)


def test_seeded_stream_is_reproducible():
    a = pg_draw(3, 1.0, np.random.default_rng(9), size=100)
    b = pg_draw(3, 1.0, np.random.default_rng(9), size=100)
    assert np.array_equal(a, b)


def test_rejects_bad_parameters():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        pg_draw(-1, 0.0, rng)
    with pytest.raises(ValueError):
        pg_draw_many([1.5], [0.0], rng)
    with pytest.raises(ValueError):
        pg_draw(1, np.inf, rng)
    with pytest.raises(ValueError):
        pg_draw_many([1, 2], [0.0], rng)


def test_gaussian_escape_hatch_is_opt_in():
    rng = np.random.default_rng(4)
    exact = pg_draw(1500, 2.0, rng, size=200)
    approx = pg_draw(1500, 2.0, rng, size=5000, approx_large_b=True)
    assert abs(approx.mean() - pg_mean(1500, 2.0)) < 4 * np.sqrt(pg_var(1500, 2.0) / 5000)
    assert abs(exact.mean() - pg_mean(1500, 2.0)) < 4 * np.sqrt(pg_var(1500, 2.0) / 200)
    mixed = pg_draw_many([2000, 3], [1.0, 1.0], rng, approx_large_b=True)
    assert mixed.shape == (2,) and np.all(mixed > 0)
