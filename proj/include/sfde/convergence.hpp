#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfde/longtime.hpp"

namespace sfde {

struct RateReport {
    std::vector<double> deltas;   // strictly decreasing
    std::vector<double> errors;
    std::vector<double> stderrs;  // zero where not applicable
    std::vector<long> samples;
    std::vector<int> surviving;   // indices entering the regression
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares fit of log y against log x.
std::pair<double, double> loglog_slope(std::span<const double> x, std::span<const double> y);

// Coarse increments as block sums of fine ones (columns), summed left to
// right so the coupling reproduces bitwise.
Mat coarsen_increments(const Mat& fine, long ratio);

// Root-mean-square terminal-segment distance between each level and a fine
// reference driven by the same Brownian path; the segment difference is the
// exact sup of the two interpolants, evaluated on the union (reference) grid.
RateReport strong_errors(const SfdeModel& model, const SchemeConfig& config_base,
                         const Segment& xi, double horizon, std::vector<double> deltas,
                         double delta_ref, int paths, std::uint64_t master_seed, int threads = 1);

// |E f(y_level(T)) - E f(y_ref(T))| with common random numbers; levels whose
// error does not clear 3x its standard error are dropped from the fit.
RateReport weak_errors(const SfdeModel& model, const SchemeConfig& config_base, const Segment& xi,
                       double horizon, const std::function<double(const Vec&)>& f,
                       std::vector<double> deltas, double delta_ref, int paths,
                       std::uint64_t master_seed, int threads = 1);

// W2 distance between long-run terminal measures at each level and at the
// reference step, independent noise per level; the slope is a diagnostic
// against the sampling floor, not an assertion.
RateReport invariant_rate(const SfdeModel& model, const SchemeConfig& config_base,
                          const Segment& xi, double horizon, std::vector<double> deltas,
                          double delta_ref, int paths, int atoms, std::uint64_t master_seed,
                          int threads = 1);

void write_rate_report_csv(const std::string& path, const RateReport& report,
                           const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sfde
