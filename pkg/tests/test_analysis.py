import numpy as np
import pytest

from herdvote.analysis import (
    ccdf,
    compare_tail_models,
    cutoff_scan,
    fit_power_law,
    log_binned_pdf,
    sample_pareto,
    tail_mass,
)


# -- ccdf -----------------------------------------------------------------------

def test_ccdf_single_value():
    curve = ccdf([2, -2, 2, -2])
    assert curve.values.tolist() == [2.0]
    assert curve.probabilities.tolist() == [1.0]


def test_ccdf_counts():
    curve = ccdf([1, -2, 4])
    assert curve.values.tolist() == [1.0, 2.0, 4.0]
    assert curve.probabilities.tolist() == pytest.approx([1.0, 2 / 3, 1 / 3])


def test_ccdf_excludes_zeros():
    curve = ccdf([0, 0, 3, 0])
    assert curve.values.tolist() == [3.0]
    assert curve.probabilities.tolist() == [1.0]


def test_ccdf_rejects_all_zero():
    with pytest.raises(ValueError):
        ccdf([0, 0, 0])


def test_ccdf_non_increasing_and_starts_at_one():
    rng = np.random.default_rng(0)
    curve = ccdf(rng.integers(-50, 50, size=5000))
    assert curve.probabilities[0] == 1.0
    assert np.all(np.diff(curve.probabilities) <= 0)


def test_tail_mass_edges():
    returns = [1, -2, 4, 0]
    assert tail_mass(returns, 2) == pytest.approx(2 / 3)
    assert tail_mass(returns, 4) == pytest.approx(1 / 3)
    assert tail_mass(returns, 5) == 0.0
    assert tail_mass(returns, 0.5) == 1.0


# -- binned density ----------------------------------------------------------------

def test_log_binned_pdf_slope_on_pareto():
    # CCDF exponent 1.5 means density exponent 2.5: slope of the log-log
    # density should sit near -2.5
    rng = np.random.default_rng(42)
    sample = sample_pareto(2.5, 1_000_000, rng)
    centers, density = log_binned_pdf(sample, bins_per_decade=8)
    keep = density > 0
    window = (centers > 2) & (centers < 100) & keep
    slope, _ = np.polyfit(np.log(centers[window]), np.log(density[window]), 1)
    assert slope == pytest.approx(-2.5, abs=0.1)


def test_log_binned_pdf_single_value():
    centers, density = log_binned_pdf([7.0, -7.0, 7.0])
    assert len(centers) == 1
    # total mass of one over the single bin
    edges_width = 1.0 / density[0]
    assert edges_width > 0


def test_log_binned_pdf_mass_invariant_under_refinement():
    rng = np.random.default_rng(1)
    sample = rng.lognormal(2.0, 1.0, size=20_000)
    for bpd in (5, 10):
        centers, density = log_binned_pdf(sample, bins_per_decade=bpd)
        # widths from the geometric grid: center_i = sqrt(e_i e_{i+1})
        ratio = 10 ** (1 / (2 * bpd))
        widths = centers * (ratio - 1 / ratio)
        assert float(np.sum(density * widths)) == pytest.approx(1.0, abs=1e-9)


def test_log_binned_pdf_rejects_empty():
    with pytest.raises(ValueError):
        log_binned_pdf([0, 0])


# -- power-law fit -----------------------------------------------------------------

def test_fit_recovers_synthetic_exponent():
    rng = np.random.default_rng(7)
    sample = sample_pareto(1.5, 100_000, rng)
    fit = fit_power_law(sample, r_min=1.0)
    assert abs(fit.alpha_density - 1.5) < 3 * fit.stderr
    assert fit.alpha_cumulative == fit.alpha_density - 1.0
    assert fit.n_tail == 100_000


def test_fit_degenerate_tail_rejected():
    with pytest.raises(ValueError):
        fit_power_law(np.full(500, 3.0), r_min=3.0)


def test_fit_needs_tail_points():
    with pytest.raises(ValueError):
        fit_power_law(np.arange(1, 50), r_min=1.0)


def test_fit_scale_invariance():
    rng = np.random.default_rng(9)
    sample = sample_pareto(2.0, 20_000, rng)
    f1 = fit_power_law(sample, r_min=1.0)
    f2 = fit_power_law(sample * 10.0, r_min=10.0)
    assert f1.alpha_density == pytest.approx(f2.alpha_density, rel=1e-12)


def test_fit_auto_cutoff_on_contaminated_sample():
    """Body below 5, clean power law above: the KS scan should find the tail."""
    rng = np.random.default_rng(23)
    tail = sample_pareto(1.8, 30_000, rng, r_min=5.0)
    body = rng.uniform(0.5, 5.0, size=70_000)
    sample = np.concatenate([tail, body])
    fit = fit_power_law(sample)
    assert fit.r_min >= 4.0
    assert abs(fit.alpha_density - 1.8) < 5 * fit.stderr


def test_sample_pareto_guard():
    with pytest.raises(ValueError):
        sample_pareto(1.0, 10, np.random.default_rng(0))


# -- cutoff scan --------------------------------------------------------------------

def test_cutoff_scan_single_series():
    rng = np.random.default_rng(3)
    rows = cutoff_scan({0.41: sample_pareto(2.0, 5000, rng)}, r_min=1.0, tail_threshold=5.0)
    assert len(rows) == 1
    assert rows[0]["x"] == 0.41
    assert rows[0]["r_min"] == 1.0
    assert 0 < rows[0]["tail_mass"] < 1


def test_cutoff_scan_identical_series_identical_rows():
    rng = np.random.default_rng(5)
    sample = sample_pareto(2.0, 5000, rng)
    rows = cutoff_scan({0.37: sample, 0.41: sample, 0.47: sample}, r_min=1.0)
    assert len(rows) == 3
    first = {k: v for k, v in rows[0].items() if k != "x"}
    for row in rows[1:]:
        assert {k: v for k, v in row.items() if k != "x"} == first


def test_cutoff_scan_common_r_min_auto():
    rng = np.random.default_rng(6)
    rows = cutoff_scan({
        0.37: sample_pareto(1.5, 20_000, rng),
        0.47: sample_pareto(2.5, 20_000, rng),
    })
    assert rows[0]["r_min"] == rows[1]["r_min"]
    assert rows[0]["alpha_density"] < rows[1]["alpha_density"]


def test_cutoff_scan_empty_rejected():
    with pytest.raises(ValueError):
        cutoff_scan({})


# -- exponential vs power comparison ---------------------------------------------------

def test_compare_tail_models_prefers_exponential_on_exponential_data():
    rng = np.random.default_rng(11)
    sample = np.round(rng.exponential(20.0, size=200_000)) + 1
    result = compare_tail_models(sample, threshold=30.0)
    assert result["preferred"] == "exponential"
    assert result["exponential_ssr"] < result["power_ssr"]


def test_compare_tail_models_prefers_power_on_pareto_data():
    rng = np.random.default_rng(13)
    sample = np.round(sample_pareto(1.5, 200_000, rng))
    sample = sample[sample >= 1]
    result = compare_tail_models(sample, threshold=10.0)
    assert result["preferred"] == "power"


def test_compare_tail_models_needs_points():
    with pytest.raises(ValueError):
        compare_tail_models([5, 5, 5, 6], threshold=5)
