#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace kan {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Derive the seed of a named sub-stream from a master seed. Streams with
/// different ids are independent for all practical purposes; the mapping is
/// fixed so results are reproducible run to run.
std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t stream_id);

/// Deterministic standard-normal stream (mt19937_64 + Box-Muller).
///
/// std::normal_distribution is implementation-defined, so we roll the
/// transform explicitly: identical seeds give bit-identical draws on a given
/// build. Draw order is the fill order of the caller.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    double next();

    void fill(double* out, std::size_t n);

    /// Fills in row-major element order (vectors are a single column).
    template <typename Derived>
    void fill(Eigen::PlainObjectBase<Derived>& out) {
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = next();
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    double next_uniform();

    /// Uniform integer in [0, bound) via rejection-free modulo of a wide draw.
    std::uint64_t next_index(std::uint64_t bound);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Per-iteration noise stream for DP-GD: keyed by (noise seed, iteration) so
/// noise is replayable regardless of scheduling.
NormalStream iteration_stream(std::uint64_t noise_seed, std::uint64_t iteration);

/// Deterministic Fisher-Yates shuffle of indices 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

} // namespace kan
