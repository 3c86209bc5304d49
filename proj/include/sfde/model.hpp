#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "sfde/noise.hpp"
#include "sfde/segment.hpp"

namespace sfde {

// Declared structural constants of a model.  They are metadata supplied by
// the model author, used to gate experiments and for spot-checks; nothing
// infers them from the functionals.
struct AssumptionParams {
    std::optional<double> diffusion_lip;         // L: diffusion Lipschitz bound
    std::optional<double> dissipativity_a1;      // a1: one-sided drift decay
    std::optional<double> dissipativity_a2;      // a2: delay coupling strength
    std::optional<double> coercivity_a3;         // a3: superlinear decay strength
    std::optional<double> coercivity_a4;         // a4: delay coupling in coercivity
    std::optional<double> coercivity_ell;        // ell: extra decay power (>= 0)
    std::optional<double> growth_K;              // K: constant offset in coercivity
    std::optional<double> local_lipschitz;       // K: drift local-Lipschitz scale
    std::optional<double> polynomial_beta;       // beta: drift local-Lipschitz power
    std::optional<double> drift_gradient_bound;  // L_b: bound on the drift gradient kernels
    std::optional<int> drift_kernel_count;       // n_b: number of gradient kernels
};

using DriftFn = std::function<void(const SegmentView&, Eigen::Ref<Vec>)>;
using DiffusionFn = std::function<void(const SegmentView&, Eigen::Ref<Mat>)>;

struct SfdeModel {
    std::string name;
    int dim = 1;
    int noise_dim = 1;
    double tau = 1.0;
    DriftFn drift;
    DiffusionFn diffusion;
    std::map<std::string, DelayMeasureSpec> measures;
    AssumptionParams params;

    Vec drift_at(const SegmentView& seg) const {
        Vec out(dim);
        drift(seg, out);
        return out;
    }
    Mat diffusion_at(const SegmentView& seg) const {
        Mat out(dim, noise_dim);
        diffusion(seg, out);
        return out;
    }
};

// b(phi) = mean of phi over the window - |phi(0)|^2 phi(0) - phi(0), with
// additive noise sigma0 or the multiplicative option
// sigma(phi) = sigma0 * (1 + kappa * mean(phi)) for dim 1.
SfdeModel make_cubic_model(double tau, double sigma0, double kappa = 0.0, int dim = 1);

// b(phi) = -a*phi(0) + b_bar * integral of phi against nu, additive sigma0.
SfdeModel make_linear_delay_model(double a, double b_bar, double sigma0, DelayMeasureSpec nu,
                                  double tau, int dim = 1);

// Delay-free Ornstein-Uhlenbeck: b(phi) = -a*phi(0), additive sigma0.  The
// grid still carries a delay window of length tau.
SfdeModel make_ou_model(double a, double sigma0, double tau, int dim = 1);

struct DissipativityReport {
    double worst_dissipativity_margin = 0.0;  // min over samples of the pairwise margin
    double worst_coercivity_margin = 0.0;     // min over samples of the single-path margin
    long negative_dissipativity = 0;
    long negative_coercivity = 0;
    long samples = 0;
};

// Monte Carlo spot-check of the declared constants over random segment pairs
// with node values in [-radius, radius].  A report, never a proof.
DissipativityReport check_dissipativity(const SfdeModel& model, double delta, long sample_count,
                                        double radius, NoiseStream& rng);

}  // namespace sfde
