#include "sfde/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "sfde/parallel.hpp"

namespace sfde {

RateValue rate_cost(const Control& v) {
    if (!v.values.allFinite()) throw DimensionError("control must be finite");
    return {0.5 * v.delta * v.values.squaredNorm()};
}

namespace {

void check_ldp_step(const SfdeModel& model, const SchemeConfig& config) {
    if (model.params.dissipativity_a2 && *model.params.dissipativity_a2 > 0.0) {
        const double cap = 1.0 / (4.0 * config.theta * *model.params.dissipativity_a2);
        if (config.delta > cap + 1e-12) {
            throw ConfigError("scheme.delta",
                              "step exceeds 1/(4*theta*a2) for the declared delay coupling");
        }
    }
}

// Shared driver for the skeleton and the stochastic controlled scheme: the
// per-step forcing enters the right-hand side before the implicit solve.
Trajectory run_controlled(const SfdeModel& model, const SchemeConfig& config, const Segment& xi,
                          const Control& v, const Mat* increments, double eps,
                          SeedLineage lineage) {
    config.validate(model.tau);
    check_ldp_step(model, config);
    if (v.values.rows() != model.noise_dim) throw DimensionError("control dimension mismatch");
    if (std::abs(v.delta - config.delta) > 1e-12) {
        throw GridMismatchError("control grid differs from the scheme grid");
    }
    if (xi.dim() != model.dim) throw DimensionError("initial segment dimension mismatch");
    if (std::abs(xi.delta() - config.delta) > 1e-12 ||
        xi.cell_count() != config.delay_nodes(model.tau)) {
        throw GridMismatchError("initial segment does not match the scheme grid");
    }
    const int dim = model.dim;
    const int n = xi.cell_count();
    const long steps = v.values.cols();
    const double sqrt_eps = std::sqrt(eps);

    Trajectory traj;
    traj.delta = config.delta;
    traj.delay_nodes = n;
    traj.lineage = lineage;
    traj.states.resize(dim, n + steps + 1);
    traj.states.leftCols(n + 1) = xi.values();

    detail::StepScratch s;
    s.resize(dim, model.noise_dim);
    Vec forcing(model.noise_dim);
    model.drift(xi.view(), s.b_current);
    for (long k = 0; k < steps; ++k) {
        double* base = traj.states.data() + k * dim;
        const SegmentView seg(base, dim, n + 1, config.delta);
        model.diffusion(seg, s.sigma);
        forcing = v.values.col(k) * config.delta;
        if (increments) forcing += sqrt_eps * increments->col(k);
        s.rhs = seg.endpoint() + (1.0 - config.theta) * config.delta * s.b_current +
                s.sigma * forcing;
        s.predictor = s.rhs + config.theta * config.delta * s.b_current;
        detail::solve_implicit(model, config, base + dim, n, k, s);
        s.b_current = s.b_work;
    }
    return traj;
}

}  // namespace

Trajectory skeleton_solve(const SfdeModel& model, const SchemeConfig& config, const Segment& xi,
                          const Control& v) {
    return run_controlled(model, config, xi, v, nullptr, 0.0, {});
}

Trajectory controlled_simulate(const SfdeModel& model, const SchemeConfig& config,
                               const Segment& xi, const Control& v, double eps, NoiseStream stream,
                               bool retain_increments) {
    if (!(eps > 0.0) || eps > 1.0) throw ConfigError("scheme.eps", "eps must lie in (0, 1]");
    const Mat increments = stream.increments(model.noise_dim, v.values.cols(), config.delta);
    Trajectory traj = run_controlled(model, config, xi, v, &increments, eps, stream.lineage());
    if (retain_increments) traj.increments = increments;
    return traj;
}

EndpointRateResult endpoint_rate(const SfdeModel& model, const SchemeConfig& config,
                                 const Segment& xi, long step_index, const Vec& target,
                                 const EndpointRateSettings& settings) {
    if (step_index < 1) throw IndexError("endpoint time must be at least one step");
    if (target.size() != model.dim) throw DimensionError("target dimension mismatch");

    EndpointRateResult result;
    result.control = Control::zero(model.noise_dim, step_index, config.delta);

    auto endpoint_of = [&](const Control& v) {
        const Trajectory w = skeleton_solve(model, config, xi, v);
        return Vec(w.state(step_index));
    };
    auto objective = [&](const Control& v, double rho) {
        result.objective_evals += 1;
        const Vec gap = endpoint_of(v) - target;
        return rate_cost(v).cost + rho * gap.squaredNorm();
    };

    result.endpoint = endpoint_of(result.control);
    if ((result.endpoint - target).norm() <= settings.endpoint_tol) {
        // The free endpoint already hits the target: zero cost exactly.
        result.rate = {0.0};
        result.converged = true;
        return result;
    }

    Control v = result.control;
    Mat grad(v.values.rows(), v.values.cols());
    double rho = settings.fixed_rho > 0.0 ? settings.fixed_rho : settings.rho_initial;
    const int stages = settings.fixed_rho > 0.0 ? 1 : settings.max_stages;

    for (int stage = 0; stage < stages; ++stage) {
        result.stages = stage + 1;
        result.objective_trace.clear();
        double current = objective(v, rho);
        result.objective_trace.push_back(current);
        double step = 1.0;
        for (int it = 0; it < settings.max_iterations; ++it) {
            // Coordinate-wise forward differences of the penalized objective.
            for (long k = 0; k < v.values.cols(); ++k) {
                for (long i = 0; i < v.values.rows(); ++i) {
                    const double h = settings.fd_step * (1.0 + std::abs(v.values(i, k)));
                    const double saved = v.values(i, k);
                    v.values(i, k) = saved + h;
                    const double up = objective(v, rho);
                    v.values(i, k) = saved;
                    grad(i, k) = (up - current) / h;
                }
            }
            const double gnorm = grad.norm();
            if (gnorm <= settings.gradient_tol * (1.0 + std::abs(current))) break;

            bool moved = false;
            step *= 2.0;  // optimistic growth, backtracking trims it
            for (int bt = 0; bt < 40; ++bt) {
                Control trial = v;
                trial.values -= step * grad;
                const double value = objective(trial, rho);
                if (value < current) {
                    v = trial;
                    current = value;
                    result.objective_trace.push_back(current);
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        result.control = v;
        result.endpoint = endpoint_of(v);
        result.rate = rate_cost(v);
        if ((result.endpoint - target).norm() <= settings.endpoint_tol) {
            result.converged = true;
            return result;
        }
        rho *= settings.rho_factor;
    }
    result.converged = settings.fixed_rho > 0.0 &&
                       (result.endpoint - target).norm() <= settings.endpoint_tol;
    return result;
}

namespace {

// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long hits, long samples, double z = 1.96) {
    const double n = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

std::vector<LogProbPoint> small_noise_logprob(const SfdeModel& model, const SchemeConfig& config,
                                              const Segment& xi, long step_index, double threshold,
                                              const std::vector<double>& eps_list,
                                              long paths_per_level, std::uint64_t master_seed,
                                              int threads) {
    std::vector<LogProbPoint> out;
    for (double eps : eps_list) {
        SchemeConfig cfg = config;
        cfg.noise_scale_eps = eps;
        std::vector<char> hit(static_cast<size_t>(paths_per_level), 0);
        parallel_for(paths_per_level, threads, [&](long p) {
            NoiseStream stream = NoiseStream::tagged(master_seed, "logprob", double_key(eps),
                                                     static_cast<std::uint64_t>(p));
            const Trajectory traj = simulate(model, cfg, xi, step_index, stream, false);
            hit[static_cast<size_t>(p)] = traj.state(step_index)[0] >= threshold ? 1 : 0;
        });
        LogProbPoint point;
        point.eps = eps;
        point.samples = paths_per_level;
        for (char h : hit) point.hits += h;
        point.p_hat = static_cast<double>(point.hits) / static_cast<double>(paths_per_level);
        const auto [lo, hi] = wilson_interval(point.hits, point.samples);
        if (point.hits == 0) {
            point.censored = true;
            point.eps_log_p = std::numeric_limits<double>::quiet_NaN();
            point.eps_log_lo = std::numeric_limits<double>::quiet_NaN();
        } else {
            point.eps_log_p = eps * std::log(point.p_hat);
            point.eps_log_lo = eps * std::log(lo);
        }
        point.eps_log_hi = eps * std::log(hi);
        out.push_back(point);
    }
    return out;
}

std::vector<LogDensityRow> log_density_check(const SfdeModel& model, const SchemeConfig& config,
                                             const Segment& xi, long step_index,
                                             const std::vector<double>& y_grid,
                                             const std::vector<double>& eps_list, long paths,
                                             double zeta0, std::uint64_t master_seed,
                                             int threads) {
    if (model.dim != 1) throw DimensionError("log-density check is scalar only");
    if (eps_list.empty() || y_grid.empty()) throw DegenerateInputError("empty grid");

    // Rate values are eps-free; compute them once per target.
    std::vector<double> rates(y_grid.size(), 0.0);
    EndpointRateSettings opt;
    opt.endpoint_tol = 1e-4;
    for (size_t i = 0; i < y_grid.size(); ++i) {
        Vec target(1);
        target[0] = y_grid[i];
        rates[i] = endpoint_rate(model, config, xi, step_index, target, opt).rate.cost;
    }

    std::vector<LogDensityRow> rows;
    std::map<double, std::vector<double>> endpoint_cache;
    auto endpoints_at = [&](double eps) -> const std::vector<double>& {
        auto it = endpoint_cache.find(eps);
        if (it != endpoint_cache.end()) return it->second;
        SchemeConfig cfg = config;
        cfg.noise_scale_eps = eps;
        std::vector<double> endpoints(static_cast<size_t>(paths), 0.0);
        parallel_for(paths, threads, [&](long p) {
            NoiseStream stream = NoiseStream::tagged(master_seed, "logdensity", double_key(eps),
                                                     static_cast<std::uint64_t>(p));
            const Trajectory traj = simulate(model, cfg, xi, step_index, stream, false);
            endpoints[static_cast<size_t>(p)] = traj.state(step_index)[0];
        });
        return endpoint_cache.emplace(eps, std::move(endpoints)).first->second;
    };

    const double eps_max = *std::max_element(eps_list.begin(), eps_list.end());
    double zeta0_eff = zeta0;
    if (zeta0_eff <= 0.0) {
        const auto& pilot = endpoints_at(eps_max);
        double mean = 0.0;
        for (double e : pilot) mean += e;
        mean /= static_cast<double>(paths);
        double var = 0.0;
        for (double e : pilot) var += (e - mean) * (e - mean);
        var /= static_cast<double>(paths - 1);
        zeta0_eff = 0.5 * std::sqrt(var);
    }
    for (double eps : eps_list) {
        const std::vector<double>& endpoints = endpoints_at(eps);
        const double width = zeta0_eff * std::sqrt(eps);  // kernel standard deviation
        const DensityEstimate est = kde(endpoints, width * width, y_grid);
        for (size_t i = 0; i < y_grid.size(); ++i) {
            LogDensityRow row;
            row.eps = eps;
            row.y = y_grid[i];
            row.eps_log_density = est.values[i] > 0.0
                                      ? eps * std::log(est.values[i])
                                      : std::numeric_limits<double>::quiet_NaN();
            row.rate_value = rates[i];
            row.bandwidth = width * width;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_control_csv(const std::string& path, const Control& control,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "k";
    for (long i = 1; i <= control.values.rows(); ++i) out << ",v_" << i;
    out << "\n";
    for (long k = 0; k < control.values.cols(); ++k) {
        out << k;
        for (long i = 0; i < control.values.rows(); ++i) out << "," << control.values(i, k);
        out << "\n";
    }
}

void write_logprob_csv(const std::string& path, const std::vector<LogProbPoint>& points,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "eps,hits,samples,p_hat,eps_log_p,eps_log_lo,eps_log_hi,censored\n";
    for (const auto& p : points) {
        out << p.eps << "," << p.hits << "," << p.samples << "," << p.p_hat << "," << p.eps_log_p
            << "," << p.eps_log_lo << "," << p.eps_log_hi << "," << (p.censored ? 1 : 0) << "\n";
    }
}

void write_logdensity_csv(const std::string& path, const std::vector<LogDensityRow>& rows,
                          const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "eps,y,eps_log_density,rate_value,bandwidth\n";
    for (const auto& r : rows) {
        out << r.eps << "," << r.y << "," << r.eps_log_density << "," << r.rate_value << ","
            << r.bandwidth << "\n";
    }
}

}  // namespace sfde
