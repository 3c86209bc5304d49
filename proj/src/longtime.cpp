#include "sfde/longtime.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "sfde/parallel.hpp"

namespace sfde {

EmpiricalMeasure::EmpiricalMeasure(std::vector<Segment> atoms_in) : atoms(std::move(atoms_in)) {
    if (atoms.empty()) throw EmptySamplesError("empirical measure needs at least one atom");
    for (const auto& a : atoms) {
        if (!a.same_grid(atoms.front())) {
            throw GridMismatchError("empirical measure atoms must share one grid");
        }
    }
}

std::vector<int> solve_assignment(const Mat& cost) {
    // Jonker-Volgenant style shortest augmenting paths with potentials.
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw DimensionError("assignment needs a square cost matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = match[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_of_col(static_cast<size_t>(n));
    for (int j = 1; j <= n; ++j) row_of_col[static_cast<size_t>(j - 1)] = match[static_cast<size_t>(j)] - 1;
    return row_of_col;
}

double wasserstein(int q, const EmpiricalMeasure& a, const EmpiricalMeasure& b, int max_atoms) {
    if (q < 1) throw DegenerateInputError("order q must be >= 1");
    if (a.size() != b.size()) {
        throw UnequalSampleCountsError("empirical measures need equal atom counts");
    }
    if (!a.atoms.front().same_grid(b.atoms.front())) {
        throw GridMismatchError("measures live on different grids");
    }
    const int n = a.size();
    if (n > max_atoms) {
        throw UnequalSampleCountsError("atom count " + std::to_string(n) +
                                       " exceeds the assignment cap " + std::to_string(max_atoms));
    }
    Mat cost(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = segment_sup_distance(a.atoms[static_cast<size_t>(i)],
                                                  b.atoms[static_cast<size_t>(j)]);
            cost(i, j) = std::min(1.0, std::pow(d, q));
        }
    }
    const std::vector<int> assign = solve_assignment(cost);
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += cost(assign[static_cast<size_t>(j)], j);
    return std::pow(total / n, 1.0 / q);
}

namespace {

std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw DegenerateInputError("degenerate regression abscissae");
    const double slope = (n * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / n};
}

}  // namespace

AttractivenessCurve attractiveness_curve(const SfdeModel& model, const SchemeConfig& config,
                                         const Segment& xi, const Segment& eta, long steps,
                                         int paths, std::uint64_t master_seed, int threads) {
    std::vector<std::vector<double>> per_path(static_cast<size_t>(paths));
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream = NoiseStream::tagged(master_seed, "attract", 0,
                                                 static_cast<std::uint64_t>(p));
        const Mat increments = stream.increments(model.noise_dim, steps, config.delta);
        const Trajectory ta = simulate_with_increments(model, config, xi, increments, {}, false);
        const Trajectory tb = simulate_with_increments(model, config, eta, increments, {}, false);
        auto& gaps = per_path[static_cast<size_t>(p)];
        gaps.resize(static_cast<size_t>(steps) + 1);
        for (long k = 0; k <= steps; ++k) {
            double worst = 0.0;
            for (int j = 0; j <= ta.delay_nodes; ++j) {
                worst = std::max(worst,
                                 (ta.states.col(k + j) - tb.states.col(k + j)).squaredNorm());
            }
            gaps[static_cast<size_t>(k)] = worst;
        }
    });

    AttractivenessCurve curve;
    curve.times.resize(static_cast<size_t>(steps) + 1);
    curve.mean_sq_gap.assign(static_cast<size_t>(steps) + 1, 0.0);
    for (long k = 0; k <= steps; ++k) curve.times[static_cast<size_t>(k)] = k * config.delta;
    for (int p = 0; p < paths; ++p) {
        for (long k = 0; k <= steps; ++k) {
            curve.mean_sq_gap[static_cast<size_t>(k)] += per_path[static_cast<size_t>(p)][static_cast<size_t>(k)];
        }
    }
    for (auto& g : curve.mean_sq_gap) g /= paths;

    std::vector<double> tx, ty;
    for (size_t k = curve.mean_sq_gap.size() / 2; k < curve.mean_sq_gap.size(); ++k) {
        if (curve.mean_sq_gap[k] > 0.0 && std::isfinite(curve.mean_sq_gap[k])) {
            tx.push_back(curve.times[k]);
            ty.push_back(std::log(curve.mean_sq_gap[k]));
        }
    }
    curve.tail_slope = (tx.size() >= 2) ? least_squares(tx, ty).first : 0.0;
    return curve;
}

EmpiricalMeasure terminal_measure(const SfdeModel& model, const SchemeConfig& config,
                                  const Segment& xi, long steps, int paths,
                                  std::uint64_t master_seed, std::string_view tag, int threads) {
    std::vector<std::optional<Segment>> atoms(static_cast<size_t>(paths));
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream =
            NoiseStream::tagged(master_seed, tag, 0, static_cast<std::uint64_t>(p));
        const Trajectory traj = simulate(model, config, xi, steps, stream, false);
        atoms[static_cast<size_t>(p)] = segment_at(traj, steps);
    });
    std::vector<Segment> collected;
    collected.reserve(static_cast<size_t>(paths));
    for (auto& a : atoms) collected.push_back(std::move(*a));
    return EmpiricalMeasure(std::move(collected));
}

std::vector<double> invariant_cauchy(const SfdeModel& model, const SchemeConfig& config,
                                     const Segment& xi, long window_steps, int window_count,
                                     int paths, std::uint64_t master_seed, int threads) {
    if (window_steps * config.delta < model.tau - 1e-12) {
        throw ConfigError("experiment.window_steps", "window must span at least one delay");
    }
    if (window_count < 2) throw ConfigError("experiment.windows", "need at least two windows");
    const long total = window_steps * window_count;
    std::vector<std::vector<std::optional<Segment>>> atoms(
        static_cast<size_t>(window_count),
        std::vector<std::optional<Segment>>(static_cast<size_t>(paths)));
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream =
            NoiseStream::tagged(master_seed, "invariant", 0, static_cast<std::uint64_t>(p));
        const Trajectory traj = simulate(model, config, xi, total, stream, false);
        for (int j = 1; j <= window_count; ++j) {
            atoms[static_cast<size_t>(j - 1)][static_cast<size_t>(p)] =
                segment_at(traj, j * window_steps);
        }
    });
    std::vector<EmpiricalMeasure> windows;
    windows.reserve(static_cast<size_t>(window_count));
    for (int j = 0; j < window_count; ++j) {
        std::vector<Segment> collected;
        collected.reserve(static_cast<size_t>(paths));
        for (auto& a : atoms[static_cast<size_t>(j)]) collected.push_back(std::move(*a));
        windows.emplace_back(std::move(collected));
    }
    std::vector<double> distances;
    distances.reserve(static_cast<size_t>(window_count - 1));
    for (int j = 0; j + 1 < window_count; ++j) {
        distances.push_back(wasserstein(2, windows[static_cast<size_t>(j)],
                                        windows[static_cast<size_t>(j + 1)], paths));
    }
    return distances;
}

TimeAverageStat time_average(const Trajectory& traj, const std::function<double(const Vec&)>& f,
                             long burn_in, std::optional<double> mean_ref) {
    const long k_max = traj.steps();
    if (burn_in < 0 || burn_in >= k_max) {
        throw EmptyWindowError("burn-in leaves no averaging window");
    }
    TimeAverageStat stat;
    stat.count = k_max - burn_in;
    double sum = 0.0;
    for (long k = burn_in + 1; k <= k_max; ++k) sum += f(traj.state(k));
    stat.mean = sum / stat.count;
    const double ref = mean_ref.value_or(stat.mean);
    double centered = 0.0;
    for (long k = burn_in + 1; k <= k_max; ++k) centered += f(traj.state(k)) - ref;
    stat.clt_statistic = centered * traj.delta / std::sqrt(stat.count * traj.delta);
    return stat;
}

double batch_means_stderr(std::span<const double> values, int batches) {
    if (batches < 2 || values.size() < static_cast<size_t>(2 * batches)) {
        throw DegenerateInputError("too few values for batch means");
    }
    const size_t len = values.size() / static_cast<size_t>(batches);
    std::vector<double> means(static_cast<size_t>(batches), 0.0);
    for (int b = 0; b < batches; ++b) {
        double s = 0.0;
        for (size_t i = 0; i < len; ++i) s += values[static_cast<size_t>(b) * len + i];
        means[static_cast<size_t>(b)] = s / len;
    }
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= batches;
    double var = 0.0;
    for (double m : means) var += (m - grand) * (m - grand);
    var /= (batches - 1);
    return std::sqrt(var / batches);
}

void write_curve_csv(const std::string& path, std::span<const double> x, std::span<const double> y,
                     const std::string& x_name, const std::string& y_name,
                     const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << x_name << "," << y_name << "\n";
    for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
        out << x[i] << "," << y[i] << "\n";
    }
}

}  // namespace sfde
