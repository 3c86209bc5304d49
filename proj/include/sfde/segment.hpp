#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sfde/errors.hpp"

namespace sfde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Probability weights on the grid nodes t_j = j*delta, j = -N..0, of the
// delay window.  Weights must be nonnegative and sum to one.
class DelayMeasure {
public:
    explicit DelayMeasure(std::vector<double> weights);

    // Trapezoidal discretisation of the normalised Lebesgue measure on the
    // delay window: half weight at the two endpoints.
    static DelayMeasure uniform(int node_count);

    // Point mass at offset r in [-tau, 0].  Off-node offsets snap to the
    // nearest node; `snapped` reports whether snapping happened.
    static DelayMeasure dirac(double r, double tau, int node_count, bool* snapped = nullptr);

    static DelayMeasure dirac_at_node(int node_index, int node_count);

    int node_count() const { return static_cast<int>(weights_.size()); }
    double weight(int i) const { return weights_[static_cast<size_t>(i)]; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> weights_;
};

// Grid-free description of a delay measure; materialises to node weights for
// any grid.  Model functionals are grid-agnostic, so they hold specs rather
// than fixed-length weight vectors.  `endpoint_mass` blends a point mass at
// offset 0 into the base measure.
struct DelayMeasureSpec {
    enum class Kind { Uniform, Dirac };
    Kind kind = Kind::Uniform;
    double at = 0.0;            // offset in [-tau, 0], Dirac only
    double endpoint_mass = 0.0;

    static DelayMeasureSpec uniform() { return {Kind::Uniform, 0.0, 0.0}; }
    static DelayMeasureSpec dirac(double r) { return {Kind::Dirac, r, 0.0}; }
    DelayMeasureSpec with_endpoint_mass(double mass) const {
        DelayMeasureSpec s = *this;
        s.endpoint_mass = mass;
        return s;
    }

    DelayMeasure materialize(double tau, int node_count) const;
};

// Non-owning view of a path on the delay window: node values are columns
// j = 0..N of a contiguous dim x (N+1) block, node j holding the value at
// offset (j - N)*delta.  Cheap to copy; the hot loops run on views into
// trajectory storage.
class SegmentView {
public:
    SegmentView(const double* data, int dim, int node_count, double delta)
        : data_(data), dim_(dim), node_count_(node_count), delta_(delta) {}

    int dim() const { return dim_; }
    int node_count() const { return node_count_; }
    int cell_count() const { return node_count_ - 1; }
    double delta() const { return delta_; }
    double tau() const { return delta_ * cell_count(); }

    // Node value at grid index j in [-N, 0].
    Eigen::Map<const Vec> node(int j) const {
        return Eigen::Map<const Vec>(data_ + static_cast<long>(cell_count() + j) * dim_, dim_);
    }
    Eigen::Map<const Vec> endpoint() const { return node(0); }

    // Piecewise-linear evaluation at offset r in [-tau, 0]; offsets within
    // 1e-12 beyond the endpoints clamp, anything further is rejected.
    Vec eval(double r) const;

    // Supremum of the Euclidean norm of the interpolated path.  The norm of
    // an affine function is convex, so the supremum over every cell is
    // attained at a node; the node maximum is exact.
    double sup_norm() const;

    // Discrete quadrature sum_j w_j * value_j.
    void integrate(const DelayMeasure& nu, Eigen::Ref<Vec> out) const;
    Vec integrate(const DelayMeasure& nu) const;

    // Trapezoid-weighted node mean, the materialised uniform measure.
    void uniform_mean(Eigen::Ref<Vec> out) const;

    const double* data() const { return data_; }

private:
    const double* data_;
    int dim_;
    int node_count_;
    double delta_;
};

// Owning path segment on [-tau, 0]; immutable after construction.
class Segment {
public:
    // `values` is dim x (N+1), column j holding the node value at offset
    // (j - N)*delta.
    Segment(Mat values, double delta);

    static Segment constant(const Vec& value, double tau, double delta);
    // xi(s) = value + slope*s on [-tau, 0].
    static Segment linear_path(const Vec& value, const Vec& slope, double tau, double delta);

    int dim() const { return static_cast<int>(values_.rows()); }
    int node_count() const { return static_cast<int>(values_.cols()); }
    int cell_count() const { return node_count() - 1; }
    double delta() const { return delta_; }
    double tau() const { return delta_ * cell_count(); }

    const Mat& values() const { return values_; }
    Vec node(int j) const { return values_.col(cell_count() + j); }
    Vec endpoint() const { return values_.col(cell_count()); }

    SegmentView view() const {
        return SegmentView(values_.data(), dim(), node_count(), delta_);
    }
    operator SegmentView() const { return view(); }

    Vec eval(double r) const { return view().eval(r); }
    double sup_norm() const { return view().sup_norm(); }
    Vec integrate(const DelayMeasure& nu) const { return view().integrate(nu); }

    // Next-segment candidate: drops the oldest node, appends u at offset 0.
    Segment shift_append(const Vec& u) const;

    bool same_grid(const Segment& other) const;

private:
    Mat values_;
    double delta_;
};

double segment_sup_distance(const Segment& a, const Segment& b);

// N = tau/delta as an exact positive integer, or a ConfigError naming `field`.
int delay_node_count(double tau, double delta, const std::string& field = "delta");

void write_segment_csv(const std::string& path, const Segment& seg,
                       const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace sfde
