#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kan/errors.hpp"

namespace kan {

/// Labeled dataset with ||x_i||_2 <= 1 and y_i in {-1, +1}. Immutable by
/// convention after construction; freely shareable across threads.
struct SampleSet {
    Eigen::MatrixXd x; // n x d
    Eigen::VectorXi y; // entries +-1
    std::string provenance; // JSON document (generator config or file digests)

    Eigen::Index size() const { return x.rows(); }
    int dim() const { return static_cast<int>(x.cols()); }
    void validate() const;
};

/// Appendix-style synthetic logistic task: x uniform on [-1,1]^d (then
/// rescaled by 1/sqrt(d) for storage), latent score h(x) = sum_j u_j(x_j)
/// with u_j a random hat-basis expansion on k uniform knots, labels
/// Bernoulli(sigmoid(s*h + xi)) mapped {0,1} -> {-1,+1}.
struct SyntheticConfig {
    Eigen::Index n = 2000;
    int d = 10;
    double s = 4.0;
    double sigma_xi2 = 0.1;
    int k = 40;
    std::uint64_t seed = 0;

    void validate() const;
};

SampleSet gen_synthetic(const SyntheticConfig& cfg);

/// Same draw of x, latent coefficients and noise as gen_synthetic(cfg), but
/// labels redrawn from the given stream. Diagnostic hook for Monte Carlo
/// label-frequency checks; gen_synthetic(cfg) is the label_seed derived from
/// cfg.seed.
SampleSet gen_synthetic_with_label_seed(const SyntheticConfig& cfg, std::uint64_t label_seed);

/// The per-sample Bernoulli parameters sigmoid(s*h(x)+xi) the generator used.
Eigen::VectorXd synthetic_label_probabilities(const SyntheticConfig& cfg);

/// Disjoint shuffled split with sizes ceil(fraction*n) and the remainder.
std::pair<SampleSet, SampleSet> split(const SampleSet& data, double fraction, std::uint64_t seed);

/// Raw IDX container (big-endian header, unsigned-byte payload).
struct IdxFile {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

IdxFile read_idx(const std::string& path);
void write_idx(const std::string& path, const IdxFile& idx);

/// Binary MNIST restricted to two digits. classes.first maps to +1,
/// classes.second to -1. Pixels are scaled to [0,1] and each image is
/// divided by max(1, ||x||_2) so the norm constraint holds.
SampleSet load_mnist_binary(const std::string& image_path, const std::string& label_path,
                            std::pair<int, int> classes = {0, 1});

/// CSV with columns y,x_0..x_{d-1} plus a provenance sidecar at path+".json".
void save_samples_csv(const std::string& path, const SampleSet& data);
SampleSet load_samples_csv(const std::string& path);

/// FNV-1a digest of a file's bytes (provenance records).
std::uint64_t file_digest(const std::string& path);

} // namespace kan
