#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sfde/segment.hpp"

namespace sfde {

struct SeedLineage {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
};

// Counter-based Gaussian stream: every draw is a pure function of
// (master_seed, path_index, position), so parallel path loops reproduce
// bitwise regardless of scheduling.
class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, std::uint64_t path_index);

    // Derives an independent stream for a named experiment and level, all
    // funded by one master seed.
    static NoiseStream tagged(std::uint64_t master_seed, std::string_view tag,
                              std::uint64_t level_key, std::uint64_t path_index);

    double next_gaussian() { return gaussian_at(position_++); }
    double gaussian_at(std::uint64_t index) const;

    // m x count matrix of Brownian increments ~ N(0, dt * I_m), advancing the
    // stream by m*count draws.
    Mat increments(int noise_dim, long count, double dt);

    std::uint64_t position() const { return position_; }
    SeedLineage lineage() const { return lineage_; }

private:
    std::uint64_t key_;
    std::uint64_t position_ = 0;
    SeedLineage lineage_;
};

// Spec-level convenience: `count` i.i.d. N(0, dt*I_m) vectors.
std::vector<Vec> gaussian_increments(NoiseStream& stream, long count, int noise_dim, double dt);

// 64-bit key for hashing experiment tags and level identifiers.
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t double_key(double x);

}  // namespace sfde
