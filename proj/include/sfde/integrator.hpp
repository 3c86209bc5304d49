#pragma once

#include <optional>
#include <vector>

#include "sfde/model.hpp"
#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

struct SchemeConfig {
    double theta = 1.0;           // implicitness weight, must lie in (1/2, 1]
    double delta = 0.1;           // grid step, must divide the model delay
    double solver_tol = 1e-10;    // residual tolerance, scaled by 1 + |u|
    int solver_max_iter = 50;
    double noise_scale_eps = 1.0;  // multiplies the diffusion, in (0, 1]

    void validate(double tau) const;
    int delay_nodes(double tau) const { return delay_node_count(tau, delta); }
};

// Node states from t_{-N} to t_K in one contiguous dim x (N+K+1) block.
struct Trajectory {
    Mat states;
    Mat increments;  // noise_dim x K; empty when not retained
    double delta = 0.0;
    int delay_nodes = 0;
    SeedLineage lineage;

    long steps() const { return states.cols() - delay_nodes - 1; }
    bool has_increments() const { return increments.size() > 0; }

    // State at t_k for k in [-N, steps()].
    Eigen::Map<const Vec> state(long k) const {
        if (k < -delay_nodes || k > steps()) throw IndexError("trajectory index out of range");
        return Eigen::Map<const Vec>(states.col(delay_nodes + k).data(), states.rows());
    }
    SegmentView segment_view(long k) const {
        if (k < 0 || k > steps()) throw IndexError("segment index out of range");
        return SegmentView(states.col(k).data(), static_cast<int>(states.rows()),
                           delay_nodes + 1, delta);
    }
};

// One implicit step from the segment `seg` with Brownian increment `dW`;
// returns the next state.
Vec implicit_step(const SfdeModel& model, const SchemeConfig& config, const Segment& seg,
                  const Vec& dW);

Trajectory simulate(const SfdeModel& model, const SchemeConfig& config, const Segment& xi,
                    long steps, NoiseStream stream, bool retain_increments = true);

// Same scheme driven by caller-supplied increments (columns are steps); used
// for coupled-path experiments where coarse increments are sums of fine ones.
Trajectory simulate_with_increments(const SfdeModel& model, const SchemeConfig& config,
                                    const Segment& xi, const Mat& increments,
                                    SeedLineage lineage = {}, bool retain_increments = true);

Segment segment_at(const Trajectory& traj, long k);

// z(t_k) = y(t_k) - theta * b(y_{t_k}) * delta for k = 0..K; the sequence
// obeys an explicit recursion in the retained increments.
std::vector<Vec> split_process(const Trajectory& traj, const SfdeModel& model,
                               const SchemeConfig& config);

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<std::pair<std::string, std::string>>& metadata = {});

namespace detail {

struct StepScratch {
    Vec b_current, rhs, predictor, u, u_trial, b_work, g, g_trial, du, dw_scaled;
    Mat sigma, jac;

    void resize(int dim, int noise_dim) {
        b_current.resize(dim);
        rhs.resize(dim);
        predictor.resize(dim);
        u.resize(dim);
        u_trial.resize(dim);
        b_work.resize(dim);
        g.resize(dim);
        g_trial.resize(dim);
        du.resize(dim);
        dw_scaled.resize(noise_dim);
        sigma.resize(dim, noise_dim);
        jac.resize(dim, dim);
    }
};

// Damped-Newton solve of u - theta*delta*b([shifted history, u]) = rhs.
// `window` points at dim*(N+1) doubles: the first N columns hold the shifted
// history, the last column is the candidate slot and holds the solution on
// return.  `rhs` and `predictor` live in the scratch.
void solve_implicit(const SfdeModel& model, const SchemeConfig& config, double* window,
                    int delay_nodes, long step_index, StepScratch& scratch);

}  // namespace detail

}  // namespace sfde
