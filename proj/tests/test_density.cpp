#include <doctest.h>

#include <random>

#include "sfde/convergence.hpp"
#include "sfde/density.hpp"
#include "sfde/integrator.hpp"

using namespace sfde;

TEST_SUITE_BEGIN("density");

TEST_CASE("kernel value at a single centred sample") {
    std::vector<double> samples{0.0};
    const DensityEstimate est = kde(samples, 1.0, {0.0});
    CHECK(est.values[0] == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("symmetric two-point sample at the origin") {
    std::vector<double> samples{-1.0, 1.0};
    for (double zeta : {0.3, 1.0, 2.5}) {
        const DensityEstimate est = kde(samples, zeta, {0.0});
        CHECK(est.values[0] == doctest::Approx(gaussian_pdf(1.0, 0.0, zeta)).epsilon(1e-14));
    }
}

TEST_CASE("smoothing a normal sample reproduces the widened normal") {
    std::mt19937_64 rng(2101);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> samples(100000);
    for (double& s : samples) s = normal(rng);
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(-4.0 + 8.0 * i / 200.0);
    const double zeta = 0.05;
    const DensityEstimate est = kde(samples, zeta, grid);
    double sup = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        sup = std::max(sup, std::abs(est.values[i] - gaussian_pdf(grid[i], 0.0, 1.0 + zeta)));
    }
    CHECK(sup < 0.01);
}

TEST_CASE("estimates are strictly positive and integrate to about one") {
    std::mt19937_64 rng(2103);
    std::normal_distribution<double> normal(0.5, 2.0);
    std::vector<double> samples(20000);
    for (double& s : samples) s = normal(rng);
    const double h = silverman_bandwidth(samples);
    const DensityEstimate est = kde(samples, h * h, density_grid(samples));
    double mass = 0.0;
    for (size_t i = 0; i + 1 < est.grid.size(); ++i) {
        CHECK(est.values[i] > 0.0);
        mass += 0.5 * (est.values[i] + est.values[i + 1]) * (est.grid[i + 1] - est.grid[i]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("estimate is linear in the empirical measure") {
    std::mt19937_64 rng(2107);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> first(300), second(700), merged;
    for (double& s : first) s = normal(rng);
    for (double& s : second) s = normal(rng) + 0.5;
    merged = first;
    merged.insert(merged.end(), second.begin(), second.end());
    std::vector<double> grid{-1.0, 0.0, 0.7, 2.0};
    const DensityEstimate ea = kde(first, 0.2, grid);
    const DensityEstimate eb = kde(second, 0.2, grid);
    const DensityEstimate em = kde(merged, 0.2, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double blended = (300.0 * ea.values[i] + 700.0 * eb.values[i]) / 1000.0;
        CHECK(em.values[i] == doctest::Approx(blended).epsilon(1e-12));
    }
}

TEST_CASE("widening the kernel lowers the peak of a unimodal sample") {
    std::mt19937_64 rng(2111);
    std::normal_distribution<double> normal(1.0, 0.7);
    std::vector<double> samples(5000);
    double mean = 0.0;
    for (double& s : samples) {
        s = normal(rng);
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    for (double zeta : {0.01, 0.1, 0.5}) {
        const double tight = kde(samples, zeta, {mean}).values[0];
        const double wide = kde(samples, 10.0 * zeta, {mean}).values[0];
        CHECK(wide < tight);
    }
}

TEST_CASE("density distances vanish on identical estimates and shift with neither") {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(-6.0 + 12.0 * i / 400.0);
    std::vector<double> p(grid.size()), q(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        p[i] = gaussian_pdf(grid[i], 0.0, 1.0);
        q[i] = gaussian_pdf(grid[i], 0.1, 1.0);
    }
    DensityEstimate ep{grid, p, 1.0, 1};
    DensityEstimate eq{grid, q, 1.0, 1};
    const auto same = density_distance(ep, ep);
    CHECK(same.first == 0.0);
    CHECK(same.second == 0.0);

    // High-resolution quadrature oracle for the L1 gap of the two normals.
    double oracle = 0.0;
    const int fine = 200000;
    for (int i = 0; i < fine; ++i) {
        const double z = -8.0 + 16.0 * (i + 0.5) / fine;
        oracle += std::abs(gaussian_pdf(z, 0.0, 1.0) - gaussian_pdf(z, 0.1, 1.0)) * (16.0 / fine);
    }
    const auto gap = density_distance(ep, eq);
    CHECK(gap.first == doctest::Approx(oracle).epsilon(1e-3));

    // Translating both grids leaves every distance unchanged.
    std::vector<double> shifted_grid = grid;
    for (double& z : shifted_grid) z += 3.0;
    DensityEstimate sp{shifted_grid, p, 1.0, 1};
    DensityEstimate sq{shifted_grid, q, 1.0, 1};
    const auto moved = density_distance(sp, sq);
    CHECK(moved.first == doctest::Approx(gap.first).epsilon(1e-12));
    CHECK(moved.second == doctest::Approx(gap.second).epsilon(1e-12));

    DensityEstimate other{std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}, 1.0, 1};
    CHECK_THROWS_AS(density_distance(ep, other), GridMismatchError);
}

TEST_CASE("exact endpoint law of the delay-free linear model") {
    const GaussianLaw longrun = ou_exact_density(1.0, 1.0, 2.0, 50.0, 1.0);
    CHECK(longrun.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(longrun.variance == doctest::Approx(0.5).epsilon(1e-12));

    const GaussianLaw frozen = ou_exact_density(1.0, 1.0, 2.0, 1.0, 0.0);
    CHECK(frozen.degenerate);
    CHECK(frozen.mean == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(frozen.pdf(0.0), DegenerateInputError);
}

TEST_CASE("exact law agrees with the fine-step moment recursion") {
    const double a = 1.0, sigma0 = 1.0, xi0 = 2.0, horizon = 1.0, eps = 1.0;
    const GaussianLaw law = ou_exact_density(a, sigma0, xi0, horizon, eps);
    // Deterministic first/second moment recursion of the fully implicit
    // scheme at a very small step.
    const double dt = std::pow(2.0, -14.0);
    const long steps = std::lround(horizon / dt);
    const double contraction = 1.0 / (1.0 + a * dt);
    double mean = xi0, var = 0.0;
    for (long k = 0; k < steps; ++k) {
        mean *= contraction;
        var = contraction * contraction * (var + eps * sigma0 * sigma0 * dt);
    }
    CHECK(law.mean == doctest::Approx(mean).epsilon(1e-3));
    CHECK(law.variance == doctest::Approx(var).epsilon(1e-3));
}

TEST_CASE("scheme density approaches the exact law as the step shrinks") {
    const double a = 1.0, sigma0 = 1.0, xi0 = 1.0, horizon = 1.0;
    const SfdeModel model = make_ou_model(a, sigma0, 1.0);
    const GaussianLaw law = ou_exact_density(a, sigma0, xi0, horizon, 1.0);
    const long paths = 20000;

    SchemeConfig fine_cfg;
    fine_cfg.theta = 1.0;
    fine_cfg.delta = std::pow(2.0, -5.0);
    const long fine_steps = std::lround(horizon / fine_cfg.delta);
    SchemeConfig coarse_cfg = fine_cfg;
    coarse_cfg.delta = std::pow(2.0, -3.0);
    const long ratio = 4;

    std::vector<double> coarse_end(static_cast<size_t>(paths));
    std::vector<double> fine_end(static_cast<size_t>(paths));
    const Segment xi_fine = Segment::constant(Vec::Constant(1, xi0), 1.0, fine_cfg.delta);
    const Segment xi_coarse = Segment::constant(Vec::Constant(1, xi0), 1.0, coarse_cfg.delta);
    for (long p = 0; p < paths; ++p) {
        NoiseStream stream = NoiseStream::tagged(7777, "density-steps", 0,
                                                 static_cast<std::uint64_t>(p));
        const Mat fine = stream.increments(1, fine_steps, fine_cfg.delta);
        const Trajectory tf = simulate_with_increments(model, fine_cfg, xi_fine, fine, {}, false);
        const Trajectory tc = simulate_with_increments(model, coarse_cfg, xi_coarse,
                                                       coarsen_increments(fine, ratio), {}, false);
        fine_end[static_cast<size_t>(p)] = tf.state(fine_steps)[0];
        coarse_end[static_cast<size_t>(p)] = tc.state(fine_steps / ratio)[0];
    }
    const double h = silverman_bandwidth(fine_end);
    std::vector<double> grid = density_grid(fine_end, 301);
    const DensityEstimate fine_est = kde(fine_end, h * h, grid);
    const DensityEstimate coarse_est = kde(coarse_end, h * h, grid);
    double sup_fine = 0.0, sup_coarse = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        sup_fine = std::max(sup_fine, std::abs(fine_est.values[i] - law.pdf(grid[i])));
        sup_coarse = std::max(sup_coarse, std::abs(coarse_est.values[i] - law.pdf(grid[i])));
    }
    CHECK(sup_fine < sup_coarse);
}

TEST_CASE("input validation") {
    std::vector<double> empty;
    CHECK_THROWS_AS(kde(empty, 0.1, {0.0}), EmptySamplesError);
    std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(kde(two, 0.0, {0.0}), DegenerateInputError);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(silverman_bandwidth(one), EmptySamplesError);
    CHECK_THROWS_AS(ou_exact_density(0.0, 1.0, 1.0, 1.0, 1.0), DegenerateInputError);
}

TEST_SUITE_END();
