#include "sfde/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sfde {

double gaussian_pdf(double x, double mean, double variance) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * M_PI * variance);
}

DensityEstimate kde(std::span<const double> samples, double zeta, std::vector<double> grid) {
    if (samples.empty()) throw EmptySamplesError("density estimation needs samples");
    if (!(zeta > 0.0)) throw DegenerateInputError("kernel variance must be positive");
    DensityEstimate est;
    est.bandwidth = zeta;
    est.sample_count = static_cast<long>(samples.size());
    est.grid = std::move(grid);
    est.values.assign(est.grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * std::sqrt(2.0 * M_PI * zeta));
    const double inv2z = 0.5 / zeta;
    for (size_t g = 0; g < est.grid.size(); ++g) {
        const double z = est.grid[g];
        double acc = 0.0;
        for (double s : samples) {
            const double d = s - z;
            acc += std::exp(-d * d * inv2z);
        }
        est.values[g] = norm * acc;
    }
    return est;
}

std::vector<double> density_grid(std::span<const double> samples, int points, double span_sigmas) {
    if (samples.size() < 2) throw EmptySamplesError("grid construction needs two samples");
    if (points < 2) throw DegenerateInputError("grid needs at least two points");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(samples.size() - 1);
    const double half = span_sigmas * std::sqrt(var);
    std::vector<double> grid(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<size_t>(i)] = mean - half + 2.0 * half * i / (points - 1);
    }
    return grid;
}

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2) throw EmptySamplesError("bandwidth rule needs two samples");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(samples.size() - 1);
    return 1.06 * std::sqrt(var) * std::pow(static_cast<double>(samples.size()), -0.2);
}

std::pair<double, double> density_distance(const DensityEstimate& a, const DensityEstimate& b) {
    if (a.grid.size() != b.grid.size()) throw GridMismatchError("density grids differ in size");
    for (size_t i = 0; i < a.grid.size(); ++i) {
        if (std::abs(a.grid[i] - b.grid[i]) > 1e-12 * (1.0 + std::abs(a.grid[i]))) {
            throw GridMismatchError("density grids differ");
        }
    }
    double l1 = 0.0;
    double sup = 0.0;
    for (size_t i = 0; i < a.grid.size(); ++i) {
        const double d = std::abs(a.values[i] - b.values[i]);
        sup = std::max(sup, d);
        if (i + 1 < a.grid.size()) {
            const double d_next = std::abs(a.values[i + 1] - b.values[i + 1]);
            l1 += 0.5 * (d + d_next) * (a.grid[i + 1] - a.grid[i]);
        }
    }
    return {l1, sup};
}

double GaussianLaw::pdf(double z) const {
    if (degenerate) throw DegenerateInputError("point mass has no density");
    return gaussian_pdf(z, mean, variance);
}

GaussianLaw ou_exact_density(double a, double sigma0, double xi0, double horizon, double eps) {
    if (!(a > 0.0)) throw DegenerateInputError("decay coefficient must be positive");
    if (!(horizon > 0.0)) throw DegenerateInputError("horizon must be positive");
    GaussianLaw law;
    law.mean = xi0 * std::exp(-a * horizon);
    law.variance = eps * sigma0 * sigma0 * (1.0 - std::exp(-2.0 * a * horizon)) / (2.0 * a);
    law.degenerate = !(law.variance > 0.0);
    return law;
}

void write_density_csv(const std::string& path, const DensityEstimate& estimate,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "# bandwidth=" << estimate.bandwidth << "\n";
    out << "# samples=" << estimate.sample_count << "\n";
    out << "z,value\n";
    for (size_t i = 0; i < estimate.grid.size(); ++i) {
        out << estimate.grid[i] << "," << estimate.values[i] << "\n";
    }
}

}  // namespace sfde
