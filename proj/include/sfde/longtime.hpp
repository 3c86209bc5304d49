#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sfde/integrator.hpp"

namespace sfde {

// Equal-weight empirical measure on segment space.
struct EmpiricalMeasure {
    std::vector<Segment> atoms;

    explicit EmpiricalMeasure(std::vector<Segment> atoms);
    int size() const { return static_cast<int>(atoms.size()); }
};

// Exact minimum-cost assignment on a square cost matrix; returns for each
// column the assigned row.
std::vector<int> solve_assignment(const Mat& cost);

// Empirical optimal-transport distance with truncated cost 1 ^ ||a - b||^q on
// the segment sup norm, solved exactly by assignment.  Requires equal atom
// counts on a shared grid; n is capped to keep the cubic solver honest.
double wasserstein(int q, const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   int max_atoms = 512);

struct AttractivenessCurve {
    std::vector<double> times;
    std::vector<double> mean_sq_gap;  // Monte Carlo mean of the squared segment gap
    double tail_slope = 0.0;          // log-linear fit over the second half
};

// Mean squared segment distance between two solutions started from xi and
// eta, coupled through shared increments path by path.
AttractivenessCurve attractiveness_curve(const SfdeModel& model, const SchemeConfig& config,
                                         const Segment& xi, const Segment& eta, long steps,
                                         int paths, std::uint64_t master_seed, int threads = 1);

// Segments of `paths` independent runs at time step `steps`, one atom each.
EmpiricalMeasure terminal_measure(const SfdeModel& model, const SchemeConfig& config,
                                  const Segment& xi, long steps, int paths,
                                  std::uint64_t master_seed, std::string_view tag = "terminal",
                                  int threads = 1);

// W2 distances between the empirical measures at consecutive window
// endpoints j*window_steps, j = 1..window_count.
std::vector<double> invariant_cauchy(const SfdeModel& model, const SchemeConfig& config,
                                     const Segment& xi, long window_steps, int window_count,
                                     int paths, std::uint64_t master_seed, int threads = 1);

struct TimeAverageStat {
    double mean = 0.0;
    long count = 0;
    double clt_statistic = 0.0;  // (1/sqrt(m*dt)) * sum (f - mean_ref) * dt
};

TimeAverageStat time_average(const Trajectory& traj, const std::function<double(const Vec&)>& f,
                             long burn_in, std::optional<double> mean_ref = std::nullopt);

// Standard error of the mean estimated from non-overlapping batch means.
double batch_means_stderr(std::span<const double> values, int batches);

void write_curve_csv(const std::string& path, std::span<const double> x, std::span<const double> y,
                     const std::string& x_name, const std::string& y_name,
                     const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sfde
