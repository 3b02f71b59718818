#include "kan/rng.hpp"

#include <cmath>
#include <numbers>

namespace kan {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
}

double NormalStream::next_uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

std::uint64_t NormalStream::next_index(std::uint64_t bound) {
    // 64-bit draw modulo bound; bias is negligible for the index ranges used here.
    return eng_() % bound;
}

double NormalStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] x [0,1).
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void NormalStream::fill(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = next();
}

NormalStream iteration_stream(std::uint64_t noise_seed, std::uint64_t iteration) {
    return NormalStream(derive_stream(noise_seed, 0xA5A5A5A500000000ULL + iteration));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    NormalStream rng(derive_stream(seed, 0x5348554646ULL));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_index(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace kan
