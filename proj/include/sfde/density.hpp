#pragma once

#include <span>
#include <string>
#include <vector>

#include "sfde/errors.hpp"

namespace sfde {

// Gaussian-mollified density of a scalar sample: the kernel g_zeta is the
// centred normal density with variance zeta.
struct DensityEstimate {
    std::vector<double> grid;
    std::vector<double> values;
    double bandwidth = 0.0;  // kernel variance zeta
    long sample_count = 0;
};

double gaussian_pdf(double x, double mean, double variance);

DensityEstimate kde(std::span<const double> samples, double zeta, std::vector<double> grid);

// Evaluation grid covering mean +/- span_sigmas sample standard deviations.
std::vector<double> density_grid(std::span<const double> samples, int points = 401,
                                 double span_sigmas = 6.0);

// Classic plug-in bandwidth 1.06 * sigma_hat * M^(-1/5) on the standard
// deviation scale; square it for the kernel-variance parameter.
double silverman_bandwidth(std::span<const double> samples);

// (L1, sup) distance between two estimates tabulated on the same grid, the
// L1 part by the trapezoid rule.
std::pair<double, double> density_distance(const DensityEstimate& a, const DensityEstimate& b);

struct GaussianLaw {
    double mean = 0.0;
    double variance = 0.0;
    bool degenerate = false;  // zero noise collapses the law to a point mass

    double pdf(double z) const;
};

// Endpoint law of the delay-free linear model dx = -a x dt + sqrt(eps) *
// sigma0 dW from the constant start xi0.
GaussianLaw ou_exact_density(double a, double sigma0, double xi0, double horizon, double eps);

void write_density_csv(const std::string& path, const DensityEstimate& estimate,
                       const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sfde
