#include "sfde/segment.hpp"

#include <cmath>
#include <fstream>

namespace sfde {

namespace {
constexpr double kDomainTol = 1e-12;
constexpr double kWeightSumTol = 1e-12;
}  // namespace

DelayMeasure::DelayMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.size() < 2) {
        throw DimensionError("delay measure needs at least two grid nodes");
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw DimensionError("delay measure weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw DimensionError("delay measure weights must sum to one, got " + std::to_string(sum));
    }
}

DelayMeasure DelayMeasure::uniform(int node_count) {
    const int cells = node_count - 1;
    std::vector<double> w(static_cast<size_t>(node_count), 1.0 / cells);
    w.front() = 0.5 / cells;
    w.back() = 0.5 / cells;
    return DelayMeasure(std::move(w));
}

DelayMeasure DelayMeasure::dirac(double r, double tau, int node_count, bool* snapped) {
    const int cells = node_count - 1;
    const double delta = tau / cells;
    if (r < -tau - kDomainTol || r > kDomainTol) {
        throw OutOfDomainError("dirac offset outside the delay window");
    }
    int j = static_cast<int>(std::lround(r / delta));
    j = std::max(-cells, std::min(0, j));
    if (snapped) *snapped = std::abs(j * delta - r) > kDomainTol;
    return dirac_at_node(j, node_count);
}

DelayMeasure DelayMeasure::dirac_at_node(int node_index, int node_count) {
    const int cells = node_count - 1;
    if (node_index < -cells || node_index > 0) {
        throw IndexError("dirac node index outside [-N, 0]");
    }
    std::vector<double> w(static_cast<size_t>(node_count), 0.0);
    w[static_cast<size_t>(cells + node_index)] = 1.0;
    return DelayMeasure(std::move(w));
}

DelayMeasure DelayMeasureSpec::materialize(double tau, int node_count) const {
    std::vector<double> base;
    switch (kind) {
        case Kind::Uniform:
            base = DelayMeasure::uniform(node_count).weights();
            break;
        case Kind::Dirac:
            base = DelayMeasure::dirac(at, tau, node_count).weights();
            break;
        default:
            throw Error("unknown delay measure kind");
    }
    if (endpoint_mass != 0.0) {
        if (endpoint_mass < 0.0 || endpoint_mass > 1.0) {
            throw DimensionError("endpoint mass must lie in [0, 1]");
        }
        for (double& w : base) w *= 1.0 - endpoint_mass;
        base.back() += endpoint_mass;
    }
    return DelayMeasure(std::move(base));
}

Vec SegmentView::eval(double r) const {
    const double tau_ = tau();
    if (r < -tau_ - kDomainTol || r > kDomainTol) {
        throw OutOfDomainError("offset " + std::to_string(r) + " outside [-tau, 0]");
    }
    r = std::max(-tau_, std::min(0.0, r));
    const double pos = (r + tau_) / delta_;
    // Offsets that are nodes up to time-arithmetic dust return the stored
    // node value exactly.
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) < 1e-9 && rounded >= 0.0 && rounded <= cell_count()) {
        return Eigen::Map<const Vec>(
            data_ + static_cast<long>(rounded) * dim_, dim_);
    }
    int j = static_cast<int>(std::floor(pos));
    j = std::max(0, std::min(cell_count() - 1, j));
    const double alpha = pos - j;
    Eigen::Map<const Vec> lo(data_ + static_cast<long>(j) * dim_, dim_);
    Eigen::Map<const Vec> hi(data_ + static_cast<long>(j + 1) * dim_, dim_);
    return (1.0 - alpha) * lo + alpha * hi;
}

double SegmentView::sup_norm() const {
    double best = 0.0;
    for (int j = 0; j < node_count_; ++j) {
        const double* col = data_ + static_cast<long>(j) * dim_;
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += col[i] * col[i];
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

void SegmentView::integrate(const DelayMeasure& nu, Eigen::Ref<Vec> out) const {
    if (nu.node_count() != node_count_) {
        throw GridMismatchError("delay measure has " + std::to_string(nu.node_count()) +
                                " nodes, segment has " + std::to_string(node_count_));
    }
    out.setZero();
    for (int j = 0; j < node_count_; ++j) {
        const double w = nu.weight(j);
        if (w == 0.0) continue;
        const double* col = data_ + static_cast<long>(j) * dim_;
        for (int i = 0; i < dim_; ++i) out[i] += w * col[i];
    }
}

Vec SegmentView::integrate(const DelayMeasure& nu) const {
    Vec out(dim_);
    integrate(nu, out);
    return out;
}

void SegmentView::uniform_mean(Eigen::Ref<Vec> out) const {
    const int cells = cell_count();
    if (dim_ == 1) {
        // Four independent accumulators keep the summation order fixed while
        // breaking the floating-point dependence chain.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        const int count = cells + 1;
        int j = 0;
        for (; j + 4 <= count; j += 4) {
            s0 += data_[j];
            s1 += data_[j + 1];
            s2 += data_[j + 2];
            s3 += data_[j + 3];
        }
        for (; j < count; ++j) s0 += data_[j];
        const double total = (s0 + s1) + (s2 + s3);
        out[0] = (total - 0.5 * (data_[0] + data_[cells])) / cells;
        return;
    }
    out.setZero();
    for (int i = 0; i < dim_; ++i) {
        out[i] = 0.5 * (data_[i] + data_[static_cast<long>(cells) * dim_ + i]);
    }
    for (int j = 1; j < cells; ++j) {
        const double* col = data_ + static_cast<long>(j) * dim_;
        for (int i = 0; i < dim_; ++i) out[i] += col[i];
    }
    out /= static_cast<double>(cells);
}

Segment::Segment(Mat values, double delta) : values_(std::move(values)), delta_(delta) {
    if (values_.cols() < 2 || values_.rows() < 1) {
        throw DimensionError("segment needs at least two nodes and one coordinate");
    }
    if (!(delta_ > 0.0)) throw DimensionError("segment grid step must be positive");
    if (!values_.allFinite()) throw DimensionError("segment values must be finite");
}

Segment Segment::constant(const Vec& value, double tau, double delta) {
    const int n = delay_node_count(tau, delta);
    Mat values(value.size(), n + 1);
    values.colwise() = value;
    return Segment(std::move(values), delta);
}

Segment Segment::linear_path(const Vec& value, const Vec& slope, double tau, double delta) {
    if (slope.size() != value.size()) throw DimensionError("slope dimension mismatch");
    const int n = delay_node_count(tau, delta);
    Mat values(value.size(), n + 1);
    for (int j = 0; j <= n; ++j) {
        values.col(j) = value + slope * ((j - n) * delta);
    }
    return Segment(std::move(values), delta);
}

Segment Segment::shift_append(const Vec& u) const {
    if (u.size() != values_.rows()) {
        throw DimensionError("appended endpoint has wrong dimension");
    }
    Mat next(values_.rows(), values_.cols());
    next.leftCols(values_.cols() - 1) = values_.rightCols(values_.cols() - 1);
    next.col(values_.cols() - 1) = u;
    return Segment(std::move(next), delta_);
}

bool Segment::same_grid(const Segment& other) const {
    return dim() == other.dim() && node_count() == other.node_count() &&
           std::abs(delta_ - other.delta_) <= kDomainTol * std::max(1.0, delta_);
}

double segment_sup_distance(const Segment& a, const Segment& b) {
    if (!a.same_grid(b)) throw GridMismatchError("segments live on different grids");
    double best = 0.0;
    for (int j = 0; j < a.node_count(); ++j) {
        best = std::max(best, (a.values().col(j) - b.values().col(j)).squaredNorm());
    }
    return std::sqrt(best);
}

int delay_node_count(double tau, double delta, const std::string& field) {
    if (!(tau > 0.0)) throw ConfigError(field, "delay must be positive");
    if (!(delta > 0.0)) throw ConfigError(field, "grid step must be positive");
    const double ratio = tau / delta;
    const long n = std::lround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
        throw ConfigError(field, "grid step must divide the delay exactly (tau/delta integer)");
    }
    return static_cast<int>(n);
}

void write_segment_csv(const std::string& path, const Segment& seg,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    const int n = seg.cell_count();
    for (int j = 0; j <= n; ++j) {
        out << (j ? "," : "") << (j - n) * seg.delta();
    }
    out << "\n";
    for (int i = 0; i < seg.dim(); ++i) {
        for (int j = 0; j <= n; ++j) {
            out << (j ? "," : "") << seg.values()(i, j);
        }
        out << "\n";
    }
}

}  // namespace sfde
