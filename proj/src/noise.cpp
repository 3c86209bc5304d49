#include "sfde/noise.hpp"

#include <bit>
#include <cmath>

namespace sfde {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform in the open interval (0, 1); never 0, safe under log.
double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t path_index)
    : key_(mix64(mix64(master_seed) ^ (kGolden * (path_index + 1)))),
      lineage_{master_seed, path_index} {}

NoiseStream NoiseStream::tagged(std::uint64_t master_seed, std::string_view tag,
                                std::uint64_t level_key, std::uint64_t path_index) {
    const std::uint64_t derived = mix64(master_seed ^ fnv1a64(tag)) + mix64(level_key);
    return NoiseStream(derived, path_index);
}

double NoiseStream::gaussian_at(std::uint64_t index) const {
    // Box-Muller on two counter-addressed uniforms: draw `index` consumes
    // counters 2*index and 2*index + 1.
    const double u1 = to_unit(mix64(key_ + kGolden * (2 * index)));
    const double u2 = to_unit(mix64(key_ + kGolden * (2 * index + 1)));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Mat NoiseStream::increments(int noise_dim, long count, double dt) {
    Mat out(noise_dim, count);
    const double scale = std::sqrt(dt);
    for (long k = 0; k < count; ++k) {
        for (int i = 0; i < noise_dim; ++i) {
            out(i, k) = scale * next_gaussian();
        }
    }
    return out;
}

std::vector<Vec> gaussian_increments(NoiseStream& stream, long count, int noise_dim, double dt) {
    Mat block = stream.increments(noise_dim, count, dt);
    std::vector<Vec> out;
    out.reserve(static_cast<size_t>(count));
    for (long k = 0; k < count; ++k) out.push_back(block.col(k));
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t double_key(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace sfde
