from math import pi, sqrt

import numpy as np
import pytest

from photonlab import estimation, fock
from photonlab.estimation import (
    ExperimentConfig,
    PosteriorDistribution,
    PosteriorUnderflowError,
    Provenance,
    bayesian_update,
    build_likelihoods,
    delta_phi,
    phi_hat,
    run_experiments,
)
from photonlab.events import DetectionEvent as D

PRIOR_STD = (pi / 6) / sqrt(12)


def exact_cfg(state, t0, t1, phi_star, **kw):
    kw.setdefault("provenance", Provenance.EXACT)
    kw.setdefault("seed", 7)
    return ExperimentConfig(state, t0, t1, phi_star, **kw)


# --- posterior moments ------------------------------------------------------


def test_uniform_moments():
    p = PosteriorDistribution.uniform(0, pi / 6)
    assert p.weights.sum() == pytest.approx(1)
    assert phi_hat(p) == pytest.approx(pi / 12)
    assert delta_phi(p) == pytest.approx(PRIOR_STD, rel=1e-5)


def test_point_mass_has_zero_width():
    grid = np.linspace(0, 1, 101)
    w = np.zeros(101)
    w[40] = 1
    p = PosteriorDistribution(grid, w)
    assert phi_hat(p) == pytest.approx(0.4) and delta_phi(p) == 0


def test_gaussian_weights():
    grid = np.linspace(-1, 1, 2000)
    logw = -0.5 * ((grid - 0.13) / 0.07) ** 2
    p = PosteriorDistribution.from_log(grid, logw)
    step = grid[1] - grid[0]
    assert phi_hat(p) == pytest.approx(0.13, abs=step)
    assert delta_phi(p) == pytest.approx(0.07, abs=step)


def test_underflow_is_reported():
    with pytest.raises(PosteriorUnderflowError):
        PosteriorDistribution.from_log(np.linspace(0, 1, 3), np.full(3, -np.inf))


def test_empty_prior_window():
    with pytest.raises(ValueError):
        PosteriorDistribution.uniform(1.0, 1.0)


# --- tables -----------------------------------------------------------------


def test_exact_table_noon_lossless(benchmark_inputs):
    table = build_likelihoods(benchmark_inputs["6::0"], 1, 1, 72, provenance="exact")
    vals = table.evaluate(table.grid)
    for e, row in zip(table.events, vals):
        if e.detected < 6:
            assert np.abs(row).max() < 1e-12


def test_mm51_d33_fits_to_zero(benchmark_inputs):
    table = build_likelihoods(benchmark_inputs["5::1"], 0.5, 0.5, 72, 20_000, 3)
    assert np.abs(table.fitted(table.grid)[table.index(D(3, 3))]).max() == 0


def test_sampled_table_close_to_exact(benchmark_inputs):
    s = benchmark_inputs["HB(6)"]
    table = build_likelihoods(s, 0.7, 0.7, 36, 100_000, 2)
    _, exact = fock.likelihood_matrix(s, table.grid, 0.7, 0.7)
    assert np.abs(table.evaluate(table.grid) - exact).max() < 0.01


def test_table_grid_too_coarse(benchmark_inputs):
    with pytest.raises(ValueError):
        build_likelihoods(benchmark_inputs["6::0"], 1, 1, 10, provenance="exact")


def test_sampled_tables_deterministic(benchmark_inputs):
    s = benchmark_inputs["4::2"]
    a = estimation._sampled_frequencies(s, 0.6, 0.6, np.linspace(0, 1, 3), 30_000, 4)
    b = estimation._sampled_frequencies(s, 0.6, 0.6, np.linspace(0, 1, 3), 30_000, 4)
    np.testing.assert_array_equal(a, b)


# --- updates ----------------------------------------------------------------


def test_empty_update_returns_prior(benchmark_inputs):
    table = build_likelihoods(benchmark_inputs["6::0"], 0.5, 0.5, 72, provenance="exact")
    prior = PosteriorDistribution.uniform(0, pi / 6)
    assert bayesian_update(prior, table, []) is prior


def test_flat_event_leaves_prior(benchmark_inputs):
    table = build_likelihoods(benchmark_inputs["6::0"], 0.5, 0.5, 72, provenance="exact")
    prior = PosteriorDistribution.uniform(0, pi / 6)
    post = bayesian_update(prior, table, [D(3, 1)])
    np.testing.assert_allclose(post.weights, prior.weights, rtol=1e-9)


def test_update_order_does_not_matter(benchmark_inputs):
    table = build_likelihoods(benchmark_inputs["HB(6)"], 0.8, 0.8, 72, provenance="exact")
    prior = PosteriorDistribution.uniform(0.2, 0.8)
    events = [D(3, 3), D(6, 0), D(2, 2), D(4, 2), D(1, 5)]
    a = bayesian_update(prior, table, events)
    b = bayesian_update(bayesian_update(prior, table, events[3:]), table, events[:3][::-1])
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-14)


def test_noon_posterior_covers_truth(benchmark_inputs):
    s = run_experiments(exact_cfg(benchmark_inputs["6::0"], 1, 1, pi / 12, reps=20))
    assert np.all(np.abs(s.estimates - pi / 12) < 3 * s.delta_phis)


# --- experiment averages ----------------------------------------------------


def test_lossless_noon_reaches_heisenberg(benchmark_inputs):
    avg, se = estimation.avg_delta_phi(exact_cfg(benchmark_inputs["6::0"], 1, 1, pi / 12))
    assert avg == pytest.approx(1 / 120, rel=0.15)
    assert se > 0


def test_full_loss_returns_prior_width(benchmark_inputs):
    for s in benchmark_inputs.values():
        avg, _ = estimation.avg_delta_phi(exact_cfg(s, 0, 0, pi / 12))
        assert avg == pytest.approx(PRIOR_STD, rel=1e-3)


def test_noon_posterior_fisher(benchmark_inputs):
    f = estimation.fisher_from_posterior(exact_cfg(benchmark_inputs["6::0"], 1, 1, pi / 12))
    assert f == pytest.approx(36, rel=0.1)


def test_posterior_fisher_saturates_at_prior_width(benchmark_inputs):
    # with almost no signal the posterior stays near the prior, so
    # 1/(N_r Var) approaches 1/(N_r Var_prior) instead of zero
    cfg = exact_cfg(benchmark_inputs["5::1"], 0.05, 0.05, pi / 8)
    floor = 1 / (cfg.n_r * PRIOR_STD**2)
    f = estimation.fisher_from_posterior(cfg)
    assert floor <= f < 1.05 * floor
    assert f < 0.01 * fock.classical_fisher(cfg.state, pi / 8, 1, 1)


def test_width_shrinks_with_more_shots(benchmark_inputs):
    s = benchmark_inputs["4::2"]
    narrow = estimation.avg_delta_phi(exact_cfg(s, 0.9, 0.9, pi / 4, n_r=800))[0]
    wide = estimation.avg_delta_phi(exact_cfg(s, 0.9, 0.9, pi / 4, n_r=200))[0]
    assert narrow == pytest.approx(wide / 2, rel=0.15)


@pytest.mark.slow
def test_posterior_variance_halves_when_shots_double(benchmark_inputs):
    phis = {"6::0": pi / 12, "5::1": pi / 8, "4::2": pi / 4, "HB(6)": pi / 6}
    for name, s in benchmark_inputs.items():
        few = run_experiments(exact_cfg(s, 0.7, 0.7, phis[name], n_r=400)).variances.mean()
        many = run_experiments(exact_cfg(s, 0.7, 0.7, phis[name], n_r=800)).variances.mean()
        assert few / many == pytest.approx(2, rel=0.2), name


@pytest.mark.slow
def test_qfi_bounds_measured_width(benchmark_inputs):
    phis = {"6::0": pi / 12, "5::1": pi / 8, "4::2": pi / 4, "HB(6)": pi / 6}
    for name, s in benchmark_inputs.items():
        for t in (1.0, 0.7, 0.4):
            summary = run_experiments(exact_cfg(s, t, t, phis[name]))
            # the window prior carries information of its own, about 1 / Var_prior
            info = summary.config.n_r * fock.qfi(s, phis[name], t, t) + 1 / PRIOR_STD**2
            assert 1 / sqrt(info) <= summary.avg_delta_phi + 2 * summary.std_error, (name, t)


def test_runs_are_deterministic(benchmark_inputs):
    cfg = exact_cfg(benchmark_inputs["HB(6)"], 0.6, 0.6, pi / 6, reps=30)
    np.testing.assert_array_equal(run_experiments(cfg).delta_phis, run_experiments(cfg).delta_phis)


def test_thread_count_does_not_change_results(benchmark_inputs, monkeypatch):
    cfg = exact_cfg(benchmark_inputs["5::1"], 0.8, 0.8, pi / 8, reps=30)
    monkeypatch.setenv("PHOTONLAB_THREADS", "1")
    serial = run_experiments(cfg).delta_phis
    monkeypatch.setenv("PHOTONLAB_THREADS", "4")
    np.testing.assert_array_equal(serial, run_experiments(cfg).delta_phis)


def test_phi_star_must_lie_in_window(benchmark_inputs):
    with pytest.raises(ValueError):
        ExperimentConfig(benchmark_inputs["6::0"], 1, 1, 1.0, window=(0, 0.5))


@pytest.mark.slow
@pytest.mark.parametrize("name,phi", [("6::0", pi / 12), ("5::1", pi / 8), ("4::2", pi / 4), ("HB(6)", pi / 6)])
def test_width_grows_with_loss(benchmark_inputs, name, phi):
    ts = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0]
    rows = [estimation.avg_delta_phi(exact_cfg(benchmark_inputs[name], t, t, phi)) for t in ts]
    for (a, sa), (b, sb) in zip(rows, rows[1:]):
        assert a <= b + 2 * sqrt(sa**2 + sb**2)


@pytest.mark.slow
def test_hb_asymmetric_posterior_fisher(benchmark_inputs):
    s = benchmark_inputs["HB(6)"]
    for t1 in (0.9, 0.7, 0.5, 0.3):
        f = estimation.fisher_from_posterior(exact_cfg(s, 1, t1, pi / 6))
        assert f == pytest.approx(fock.classical_fisher(s, pi / 6, 1, t1), rel=0.1)


# --- bounds and phi* --------------------------------------------------------


def test_bounds_examples():
    assert estimation.bounds(6, 1, 1) == pytest.approx((1 / 6, 1 / sqrt(6)))
    assert estimation.bounds(6, 0.5, 0.5)[1] == pytest.approx(sqrt(0.5) / sqrt(1.5))
    assert estimation.bounds(6, 1, 0)[1] == np.inf
    assert estimation.bounds(6, 1, 1e-12)[1] > 1e5
    with pytest.raises(ValueError):
        estimation.bounds(6, 1, 2)


def test_delta_phi_min():
    assert estimation.delta_phi_min(36) == pytest.approx(1 / 6)
    assert estimation.delta_phi_min(0) == np.inf


@pytest.mark.parametrize("name,want", [("6::0", pi / 12), ("4::2", pi / 4)])
def test_find_optimal_phistar(benchmark_inputs, name, want):
    step = pi / 48
    top = pi / 6 if name == "6::0" else pi / 2
    candidates = np.arange(1, round(top / step) + 1) * step
    base = exact_cfg(benchmark_inputs[name], 1, 1, want, reps=60)
    best, scored = estimation.find_optimal_phistar(base, candidates)
    assert abs(best - want) <= step + 1e-12
    assert len(scored) == len(candidates)
