#include "sfde/convergence.hpp"

#include <cmath>
#include <fstream>

#include "sfde/parallel.hpp"

namespace sfde {

std::pair<double, double> loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DegenerateInputError("log-log fit needs at least two points");
    }
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw DegenerateInputError("log-log fit needs positive values");
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw DegenerateInputError("log-log abscissae coincide");
    const double slope = (n * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / n};
}

Mat coarsen_increments(const Mat& fine, long ratio) {
    if (ratio < 1 || fine.cols() % ratio != 0) {
        throw NonNestedGridsError("fine step count is not a multiple of the coarsening ratio");
    }
    Mat coarse(fine.rows(), fine.cols() / ratio);
    for (long k = 0; k < coarse.cols(); ++k) {
        Vec sum = Vec::Zero(fine.rows());
        for (long j = 0; j < ratio; ++j) sum += fine.col(k * ratio + j);
        coarse.col(k) = sum;
    }
    return coarse;
}

namespace {

struct LevelGrid {
    double delta;
    long steps;   // to the horizon
    long ratio;   // delta / delta_ref
};

std::vector<LevelGrid> validate_levels(double tau, double horizon, std::vector<double>& deltas,
                                       double delta_ref) {
    if (deltas.empty()) throw DegenerateInputError("need at least one level");
    std::sort(deltas.begin(), deltas.end(), std::greater<double>());
    std::vector<LevelGrid> grids;
    auto check_ratio = [](double coarse, double fine) {
        const double r = coarse / fine;
        const long ri = std::lround(r);
        if (ri < 1 || std::abs(r - static_cast<double>(ri)) > 1e-9) {
            throw NonNestedGridsError("steps are not nested");
        }
        return ri;
    };
    for (size_t i = 0; i < deltas.size(); ++i) {
        delay_node_count(tau, deltas[i], "experiment.deltas");
        if (i + 1 < deltas.size()) check_ratio(deltas[i], deltas[i + 1]);
        const double k = horizon / deltas[i];
        if (std::abs(k - std::lround(k)) > 1e-9) {
            throw NonNestedGridsError("horizon is not a multiple of every step");
        }
        grids.push_back({deltas[i], std::lround(k), check_ratio(deltas[i], delta_ref)});
    }
    delay_node_count(tau, delta_ref, "experiment.delta_ref");
    // Either a degenerate self-comparison or a reference at least four times
    // finer than the finest level.
    const long finest_ratio = std::lround(deltas.back() / delta_ref);
    if (finest_ratio != 1 && finest_ratio < 4) {
        throw NonNestedGridsError("reference step must be at most a quarter of the finest level");
    }
    const double kr = horizon / delta_ref;
    if (std::abs(kr - std::lround(kr)) > 1e-9) {
        throw NonNestedGridsError("horizon is not a multiple of the reference step");
    }
    return grids;
}

// Exact sup distance between the level segment and the reference segment:
// both interpolants are piecewise linear with breakpoints on the reference
// grid, so the maximum over reference nodes is the true sup.
double coupled_segment_sup(const Trajectory& level, const Trajectory& ref, long ratio) {
    const long k_level = level.steps();
    const long k_ref = ref.steps();
    const int n_ref = ref.delay_nodes;
    const int dim = static_cast<int>(ref.states.rows());
    double worst = 0.0;
    for (int j = 0; j <= n_ref; ++j) {
        const long ref_col = k_ref - n_ref + j + ref.delay_nodes;  // node t_K - (n_ref - j)*dref
        const long idx = j;                                        // offset on the fine grid
        const long cell = idx / ratio;
        const double alpha = static_cast<double>(idx - cell * ratio) / static_cast<double>(ratio);
        const long lv_col = k_level - level.delay_nodes + cell + level.delay_nodes;
        double ss = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double lv = (alpha == 0.0)
                                  ? level.states(i, lv_col)
                                  : (1.0 - alpha) * level.states(i, lv_col) +
                                        alpha * level.states(i, lv_col + 1);
            const double d = lv - ref.states(i, ref_col);
            ss += d * d;
        }
        worst = std::max(worst, ss);
    }
    return std::sqrt(worst);
}

}  // namespace

RateReport strong_errors(const SfdeModel& model, const SchemeConfig& config_base,
                         const Segment& xi, double horizon, std::vector<double> deltas,
                         double delta_ref, int paths, std::uint64_t master_seed, int threads) {
    auto grids = validate_levels(model.tau, horizon, deltas, delta_ref);
    const long ref_steps = std::lround(horizon / delta_ref);
    const size_t levels = grids.size();

    Mat sq_errors(static_cast<long>(levels), paths);
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream =
            NoiseStream::tagged(master_seed, "strong", 0, static_cast<std::uint64_t>(p));
        const Mat fine = stream.increments(model.noise_dim, ref_steps, delta_ref);
        SchemeConfig ref_cfg = config_base;
        ref_cfg.delta = delta_ref;
        const Segment xi_fine = [&] {
            Mat nodes(model.dim, delay_node_count(model.tau, delta_ref) + 1);
            for (long j = 0; j < nodes.cols(); ++j) {
                nodes.col(j) = xi.eval(-model.tau + j * delta_ref);
            }
            return Segment(std::move(nodes), delta_ref);
        }();
        const Trajectory ref = simulate_with_increments(model, ref_cfg, xi_fine, fine, {}, false);
        for (size_t l = 0; l < levels; ++l) {
            SchemeConfig cfg = config_base;
            cfg.delta = grids[l].delta;
            const Mat coarse = coarsen_increments(fine, grids[l].ratio);
            const Segment xi_level = [&] {
                Mat nodes(model.dim, delay_node_count(model.tau, cfg.delta) + 1);
                for (long j = 0; j < nodes.cols(); ++j) {
                    nodes.col(j) = xi.eval(-model.tau + j * cfg.delta);
                }
                return Segment(std::move(nodes), cfg.delta);
            }();
            const Trajectory lv = simulate_with_increments(model, cfg, xi_level, coarse, {}, false);
            const double err = coupled_segment_sup(lv, ref, grids[l].ratio);
            sq_errors(static_cast<long>(l), p) = err * err;
        }
    });

    RateReport report;
    for (size_t l = 0; l < levels; ++l) {
        report.deltas.push_back(grids[l].delta);
        report.errors.push_back(std::sqrt(sq_errors.row(static_cast<long>(l)).mean()));
        report.stderrs.push_back(0.0);
        report.samples.push_back(paths);
        report.surviving.push_back(static_cast<int>(l));
    }
    if (levels >= 2) {
        auto [slope, intercept] = loglog_slope(report.deltas, report.errors);
        report.slope = slope;
        report.intercept = intercept;
    }
    return report;
}

RateReport weak_errors(const SfdeModel& model, const SchemeConfig& config_base, const Segment& xi,
                       double horizon, const std::function<double(const Vec&)>& f,
                       std::vector<double> deltas, double delta_ref, int paths,
                       std::uint64_t master_seed, int threads) {
    auto grids = validate_levels(model.tau, horizon, deltas, delta_ref);
    const long ref_steps = std::lround(horizon / delta_ref);
    const size_t levels = grids.size();

    Mat diffs(static_cast<long>(levels), paths);
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream =
            NoiseStream::tagged(master_seed, "weak", 0, static_cast<std::uint64_t>(p));
        const Mat fine = stream.increments(model.noise_dim, ref_steps, delta_ref);
        SchemeConfig ref_cfg = config_base;
        ref_cfg.delta = delta_ref;
        Mat ref_nodes(model.dim, delay_node_count(model.tau, delta_ref) + 1);
        for (long j = 0; j < ref_nodes.cols(); ++j) {
            ref_nodes.col(j) = xi.eval(-model.tau + j * delta_ref);
        }
        const Trajectory ref =
            simulate_with_increments(model, ref_cfg, Segment(ref_nodes, delta_ref), fine, {}, false);
        const double f_ref = f(ref.state(ref.steps()));
        for (size_t l = 0; l < levels; ++l) {
            SchemeConfig cfg = config_base;
            cfg.delta = grids[l].delta;
            Mat nodes(model.dim, delay_node_count(model.tau, cfg.delta) + 1);
            for (long j = 0; j < nodes.cols(); ++j) {
                nodes.col(j) = xi.eval(-model.tau + j * cfg.delta);
            }
            const Trajectory lv = simulate_with_increments(
                model, cfg, Segment(nodes, cfg.delta), coarsen_increments(fine, grids[l].ratio),
                {}, false);
            diffs(static_cast<long>(l), p) = f(lv.state(lv.steps())) - f_ref;
        }
    });

    RateReport report;
    for (size_t l = 0; l < levels; ++l) {
        const auto row = diffs.row(static_cast<long>(l));
        const double mean = row.mean();
        const double var = (row.array() - mean).square().sum() / (paths - 1);
        report.deltas.push_back(grids[l].delta);
        report.errors.push_back(std::abs(mean));
        report.stderrs.push_back(std::sqrt(var / paths));
        report.samples.push_back(paths);
    }
    std::vector<double> sx, sy;
    for (size_t l = 0; l < levels; ++l) {
        if (report.errors[l] > 3.0 * report.stderrs[l] && report.errors[l] > 0.0) {
            report.surviving.push_back(static_cast<int>(l));
            sx.push_back(report.deltas[l]);
            sy.push_back(report.errors[l]);
        }
    }
    if (sx.size() >= 2) {
        auto [slope, intercept] = loglog_slope(sx, sy);
        report.slope = slope;
        report.intercept = intercept;
    }
    return report;
}

RateReport invariant_rate(const SfdeModel& model, const SchemeConfig& config_base,
                          const Segment& xi, double horizon, std::vector<double> deltas,
                          double delta_ref, int paths, int atoms, std::uint64_t master_seed,
                          int threads) {
    auto grids = validate_levels(model.tau, horizon, deltas, delta_ref);
    if (atoms > paths) throw ConfigError("experiment.atoms", "atoms cannot exceed paths");

    // All terminal segments are re-sampled on the reference grid; nested
    // grids make that an exact representation of each coarser interpolant.
    const int ref_nodes = delay_node_count(model.tau, delta_ref);
    auto measure_at = [&](double delta, std::uint64_t level_key) {
        SchemeConfig cfg = config_base;
        cfg.delta = delta;
        const long steps = std::lround(horizon / delta);
        Mat nodes(model.dim, delay_node_count(model.tau, delta) + 1);
        for (long j = 0; j < nodes.cols(); ++j) {
            nodes.col(j) = xi.eval(-model.tau + j * delta);
        }
        const Segment start(nodes, delta);
        std::vector<std::optional<Segment>> collected(static_cast<size_t>(atoms));
        parallel_for(atoms, threads, [&](long p) {
            NoiseStream stream = NoiseStream::tagged(master_seed, "invariant-rate", level_key,
                                                     static_cast<std::uint64_t>(p));
            const Trajectory traj = simulate(model, cfg, start, steps, stream, false);
            const Segment tail = segment_at(traj, steps);
            Mat regrid(model.dim, ref_nodes + 1);
            for (int j = 0; j <= ref_nodes; ++j) {
                regrid.col(j) = tail.eval(-model.tau + j * delta_ref);
            }
            collected[static_cast<size_t>(p)] = Segment(std::move(regrid), delta_ref);
        });
        std::vector<Segment> out;
        out.reserve(static_cast<size_t>(atoms));
        for (auto& c : collected) out.push_back(std::move(*c));
        return EmpiricalMeasure(std::move(out));
    };

    const EmpiricalMeasure reference = measure_at(delta_ref, double_key(delta_ref));
    RateReport report;
    for (const auto& g : grids) {
        const EmpiricalMeasure level = measure_at(g.delta, double_key(g.delta));
        report.deltas.push_back(g.delta);
        report.errors.push_back(wasserstein(2, level, reference, std::max(atoms, 512)));
        report.stderrs.push_back(0.0);
        report.samples.push_back(atoms);
        report.surviving.push_back(static_cast<int>(report.deltas.size()) - 1);
    }
    bool positive = report.errors.size() >= 2;
    for (double e : report.errors) positive = positive && e > 0.0;
    if (positive) {
        auto [slope, intercept] = loglog_slope(report.deltas, report.errors);
        report.slope = slope;
        report.intercept = intercept;
    }
    return report;
}

void write_rate_report_csv(const std::string& path, const RateReport& report,
                           const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "# slope=" << report.slope << "\n";
    out << "# intercept=" << report.intercept << "\n";
    out << "# surviving_levels=" << report.surviving.size() << "\n";
    out << "delta,error,stderr,samples\n";
    for (size_t i = 0; i < report.deltas.size(); ++i) {
        out << report.deltas[i] << "," << report.errors[i] << "," << report.stderrs[i] << ","
            << report.samples[i] << "\n";
    }
}

}  // namespace sfde
