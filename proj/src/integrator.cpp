#include "sfde/integrator.hpp"

#include <cmath>
#include <fstream>

namespace sfde {

void SchemeConfig::validate(double tau) const {
    if (!(theta > 0.5) || theta > 1.0) {
        throw ConfigError("scheme.theta", "theta must lie in (0.5, 1]");
    }
    if (!(delta > 0.0) || delta > 1.0) {
        throw ConfigError("scheme.delta", "step must lie in (0, 1]");
    }
    delay_node_count(tau, delta, "scheme.delta");
    if (!(solver_tol > 0.0)) throw ConfigError("scheme.solver_tol", "must be positive");
    if (solver_max_iter < 1) throw ConfigError("scheme.solver_max_iter", "must be >= 1");
    if (!(noise_scale_eps > 0.0) || noise_scale_eps > 1.0) {
        throw ConfigError("scheme.eps", "noise scale must lie in (0, 1]");
    }
}

namespace detail {

namespace {

double residual(const SfdeModel& model, double theta_dt, const SegmentView& window,
                const Vec& u, const Vec& rhs, Vec& b_work, Vec& g_out) {
    model.drift(window, b_work);
    g_out = u - theta_dt * b_work - rhs;
    const double r = g_out.norm();
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

}  // namespace

// On success the scratch's b_work holds the drift of the accepted window,
// which is the next step's current-segment drift; callers reuse it instead of
// re-evaluating.
void solve_implicit(const SfdeModel& model, const SchemeConfig& config, double* window,
                    int delay_nodes, long step_index, StepScratch& s) {
    const int dim = model.dim;
    const double theta_dt = config.theta * config.delta;
    const SegmentView wview(window, dim, delay_nodes + 1, config.delta);
    Eigen::Map<Vec> candidate(window + static_cast<long>(delay_nodes) * dim, dim);

    s.u = s.predictor;
    candidate = s.u;
    double res = residual(model, theta_dt, wview, s.u, s.rhs, s.b_work, s.g);
    if (!std::isfinite(res)) {
        // Wild predictor: restart from the drift-free candidate.
        s.u = s.rhs;
        candidate = s.u;
        res = residual(model, theta_dt, wview, s.u, s.rhs, s.b_work, s.g);
    }

    for (int iter = 0; iter <= config.solver_max_iter; ++iter) {
        if (res <= config.solver_tol * (1.0 + s.u.norm())) {
            candidate = s.u;
            return;
        }
        if (iter == config.solver_max_iter || !std::isfinite(res)) break;

        // Only the newest node depends on u, so the Jacobian of the drift is
        // a plain directional finite difference in the endpoint.
        const double h = 1e-7 * (1.0 + s.u.norm());
        const Vec b_at_u = s.b_work;  // drift at the current iterate
        for (int i = 0; i < dim; ++i) {
            candidate = s.u;
            candidate[i] += h;
            model.drift(wview, s.b_work);
            s.jac.col(i) = (theta_dt / h) * (b_at_u - s.b_work);
        }
        s.jac.diagonal().array() += 1.0;
        if (!s.jac.allFinite()) break;
        s.du = s.jac.partialPivLu().solve(-s.g);
        if (!s.du.allFinite()) break;

        double lambda = 1.0;
        bool improved = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            s.u_trial = s.u + lambda * s.du;
            candidate = s.u_trial;
            const double res_trial =
                residual(model, theta_dt, wview, s.u_trial, s.rhs, s.b_work, s.g_trial);
            if (res_trial < res) {
                s.u = s.u_trial;
                s.g = s.g_trial;
                res = res_trial;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    throw SolverDivergedError("implicit step did not converge (residual " +
                                  std::to_string(res) + "), step size too large for the model",
                              res, step_index);
}

}  // namespace detail

namespace {

void check_initial(const SfdeModel& model, const SchemeConfig& config, const Segment& xi) {
    config.validate(model.tau);
    if (xi.dim() != model.dim) throw DimensionError("initial segment dimension mismatch");
    if (std::abs(xi.delta() - config.delta) > 1e-12) {
        throw GridMismatchError("initial segment step differs from the scheme step");
    }
    if (xi.cell_count() != config.delay_nodes(model.tau)) {
        throw GridMismatchError("initial segment does not span the model delay");
    }
}

}  // namespace

Vec implicit_step(const SfdeModel& model, const SchemeConfig& config, const Segment& seg,
                  const Vec& dW) {
    check_initial(model, config, seg);
    if (dW.size() != model.noise_dim) throw DimensionError("increment dimension mismatch");
    const int dim = model.dim;
    const int n = seg.cell_count();

    detail::StepScratch s;
    s.resize(dim, model.noise_dim);
    const SegmentView seg_view = seg.view();
    model.drift(seg_view, s.b_current);
    model.diffusion(seg_view, s.sigma);
    const double sqrt_eps = std::sqrt(config.noise_scale_eps);
    s.rhs = seg_view.endpoint() + (1.0 - config.theta) * config.delta * s.b_current +
            sqrt_eps * (s.sigma * dW);
    s.predictor = s.rhs + config.theta * config.delta * s.b_current;

    Mat window(dim, n + 1);
    window.leftCols(n) = seg.values().rightCols(n);
    detail::solve_implicit(model, config, window.data(), n, -1, s);
    return window.col(n);
}

Trajectory simulate_with_increments(const SfdeModel& model, const SchemeConfig& config,
                                    const Segment& xi, const Mat& increments,
                                    SeedLineage lineage, bool retain_increments) {
    check_initial(model, config, xi);
    if (increments.rows() != model.noise_dim) {
        throw DimensionError("increment rows must match the noise dimension");
    }
    const int dim = model.dim;
    const int n = xi.cell_count();
    const long steps = increments.cols();
    const double sqrt_eps = std::sqrt(config.noise_scale_eps);

    Trajectory traj;
    traj.delta = config.delta;
    traj.delay_nodes = n;
    traj.lineage = lineage;
    traj.states.resize(dim, n + steps + 1);
    traj.states.leftCols(n + 1) = xi.values();

    detail::StepScratch s;
    s.resize(dim, model.noise_dim);
    model.drift(xi.view(), s.b_current);
    for (long k = 0; k < steps; ++k) {
        double* base = traj.states.data() + k * dim;
        const SegmentView seg(base, dim, n + 1, config.delta);
        model.diffusion(seg, s.sigma);
        s.rhs = seg.endpoint() + (1.0 - config.theta) * config.delta * s.b_current +
                sqrt_eps * (s.sigma * increments.col(k));
        s.predictor = s.rhs + config.theta * config.delta * s.b_current;
        detail::solve_implicit(model, config, base + dim, n, k, s);
        s.b_current = s.b_work;
    }
    if (retain_increments) traj.increments = increments;
    return traj;
}

Trajectory simulate(const SfdeModel& model, const SchemeConfig& config, const Segment& xi,
                    long steps, NoiseStream stream, bool retain_increments) {
    const Mat increments = stream.increments(model.noise_dim, steps, config.delta);
    return simulate_with_increments(model, config, xi, increments, stream.lineage(),
                                    retain_increments);
}

Segment segment_at(const Trajectory& traj, long k) {
    if (k < 0 || k > traj.steps()) throw IndexError("segment index out of range");
    return Segment(traj.states.middleCols(k, traj.delay_nodes + 1), traj.delta);
}

std::vector<Vec> split_process(const Trajectory& traj, const SfdeModel& model,
                               const SchemeConfig& config) {
    if (traj.steps() > 0 && !traj.has_increments()) {
        throw MissingIncrementsError("split process needs retained increments");
    }
    std::vector<Vec> z;
    z.reserve(static_cast<size_t>(traj.steps()) + 1);
    Vec b(model.dim);
    for (long k = 0; k <= traj.steps(); ++k) {
        const SegmentView seg = traj.segment_view(k);
        model.drift(seg, b);
        z.push_back(seg.endpoint() - config.theta * config.delta * b);
    }
    return z;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    const int dim = static_cast<int>(traj.states.rows());
    const int noise_dim = traj.has_increments() ? static_cast<int>(traj.increments.rows()) : 0;
    out << "time";
    for (int i = 1; i <= dim; ++i) out << ",state_" << i;
    for (int i = 1; i <= noise_dim; ++i) out << ",dW_" << i;
    out << "\n";
    for (long k = -traj.delay_nodes; k <= traj.steps(); ++k) {
        out << k * traj.delta;
        for (int i = 0; i < dim; ++i) out << "," << traj.state(k)[i];
        for (int i = 0; i < noise_dim; ++i) {
            if (k >= 0 && k < traj.steps()) {
                out << "," << traj.increments(i, k);
            } else {
                out << ",";
            }
        }
        out << "\n";
    }
}

}  // namespace sfde
