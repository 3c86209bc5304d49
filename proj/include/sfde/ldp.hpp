#pragma once

#include <string>
#include <vector>

#include "sfde/density.hpp"
#include "sfde/integrator.hpp"

namespace sfde {

// Piecewise-constant control on the scheme grid, one column per step.
struct Control {
    Mat values;  // noise_dim x K
    double delta = 0.0;

    static Control zero(int noise_dim, long steps, double delta) {
        Control v;
        v.values = Mat::Zero(noise_dim, steps);
        v.delta = delta;
        return v;
    }
    long steps() const { return values.cols(); }
};

struct RateValue {
    double cost = 0.0;  // (delta/2) * sum_k |v(t_k)|^2
};

RateValue rate_cost(const Control& v);

// Deterministic controlled recursion: noise replaced by sigma(w_{t_k}) v_k dt.
Trajectory skeleton_solve(const SfdeModel& model, const SchemeConfig& config, const Segment& xi,
                          const Control& v);

// Stochastic controlled recursion with forcing sqrt(eps) dW_k + v_k dt.
Trajectory controlled_simulate(const SfdeModel& model, const SchemeConfig& config,
                               const Segment& xi, const Control& v, double eps,
                               NoiseStream stream, bool retain_increments = true);

struct EndpointRateSettings {
    double endpoint_tol = 1e-3;     // admissible |w(t) - z|
    double rho_initial = 1.0;       // first penalty weight
    double rho_factor = 10.0;       // growth per continuation stage
    int max_stages = 10;
    int max_iterations = 600;       // gradient steps per stage
    double gradient_tol = 1e-9;
    double fd_step = 1e-6;
    double fixed_rho = 0.0;         // > 0 pins a single penalty stage
};

struct EndpointRateResult {
    RateValue rate;
    Control control;
    Vec endpoint;
    bool converged = false;  // endpoint within tolerance; best found otherwise
    int stages = 0;
    long objective_evals = 0;
    std::vector<double> objective_trace;  // per accepted step of the last stage
};

// Approximate minimal quadratic cost steering the skeleton endpoint at step
// `step_index` to `target`: penalty continuation around finite-difference
// gradient descent with backtracking.  Reports the best control found and
// never claims optimality it did not verify.
EndpointRateResult endpoint_rate(const SfdeModel& model, const SchemeConfig& config,
                                 const Segment& xi, long step_index, const Vec& target,
                                 const EndpointRateSettings& settings = {});

struct LogProbPoint {
    double eps = 0.0;
    long hits = 0;
    long samples = 0;
    double p_hat = 0.0;
    double eps_log_p = 0.0;  // NaN when censored
    double eps_log_lo = 0.0;  // Wilson interval mapped through eps*log
    double eps_log_hi = 0.0;
    bool censored = false;   // no hits at this level
};

// eps * log P(y(t) >= threshold in the first coordinate) across noise levels.
std::vector<LogProbPoint> small_noise_logprob(const SfdeModel& model, const SchemeConfig& config,
                                              const Segment& xi, long step_index, double threshold,
                                              const std::vector<double>& eps_list,
                                              long paths_per_level, std::uint64_t master_seed,
                                              int threads = 1);

struct LogDensityRow {
    double eps = 0.0;
    double y = 0.0;
    double eps_log_density = 0.0;
    double rate_value = 0.0;  // endpoint rate at y, shared across eps
    double bandwidth = 0.0;
};

// eps * ln of the mollified endpoint density against the endpoint rate
// function, scalar additive-noise models only; the kernel width shrinks like
// zeta0 * sqrt(eps).
std::vector<LogDensityRow> log_density_check(const SfdeModel& model, const SchemeConfig& config,
                                             const Segment& xi, long step_index,
                                             const std::vector<double>& y_grid,
                                             const std::vector<double>& eps_list, long paths,
                                             double zeta0, std::uint64_t master_seed,
                                             int threads = 1);

void write_control_csv(const std::string& path, const Control& control,
                       const std::vector<std::pair<std::string, std::string>>& metadata = {});
void write_logprob_csv(const std::string& path, const std::vector<LogProbPoint>& points,
                       const std::vector<std::pair<std::string, std::string>>& metadata = {});
void write_logdensity_csv(const std::string& path, const std::vector<LogDensityRow>& rows,
                          const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sfde
