#include "kan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kan/basis.hpp"
#include "kan/rng.hpp"

namespace kan {

namespace {

constexpr std::uint64_t kStreamX = 1;
constexpr std::uint64_t kStreamTheta = 2;
constexpr std::uint64_t kStreamXi = 3;
constexpr std::uint64_t kStreamLabels = 4;

double stable_sigmoid(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct SyntheticDraw {
    Eigen::MatrixXd raw_x;  // n x d, uniform on [-1,1]^d (pre-scaling)
    Eigen::VectorXd logits; // s*h(x) + xi
};

SyntheticDraw synthetic_draw(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticDraw out;
    out.raw_x.resize(cfg.n, cfg.d);
    NormalStream xs(derive_stream(cfg.seed, kStreamX));
    for (Eigen::Index i = 0; i < cfg.n; ++i)
        for (int j = 0; j < cfg.d; ++j) out.raw_x(i, j) = 2.0 * xs.next_uniform() - 1.0;

    Eigen::MatrixXd theta(cfg.d, cfg.k);
    NormalStream ts(derive_stream(cfg.seed, kStreamTheta));
    ts.fill(theta);

    const BasisSpec latent = BasisSpec::hat(cfg.k, -1.0, 1.0);
    out.logits.resize(cfg.n);
    NormalStream xis(derive_stream(cfg.seed, kStreamXi));
    const double sigma_xi = std::sqrt(cfg.sigma_xi2);
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        double h = 0.0;
        for (int j = 0; j < cfg.d; ++j) {
            const BasisJet jet = basis_jet_local(latent, out.raw_x(i, j));
            for (int q = 0; q < jet.count; ++q) h += theta(j, jet.first + q) * jet.value[q];
        }
        out.logits[i] = cfg.s * h + sigma_xi * xis.next();
    }
    return out;
}

} // namespace

void SampleSet::validate() const {
    if (x.rows() != y.size()) throw input_error("sample/label count mismatch");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 1 && y[i] != -1) throw input_error("labels must be +-1");
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x.row(i).norm() > 1.0 + 1e-12)
            throw input_error("sample norm exceeds 1 at row " + std::to_string(i));
}

void SyntheticConfig::validate() const {
    if (n < 1) throw config_error("synthetic generator requires n >= 1");
    if (d < 1) throw config_error("synthetic generator requires d >= 1");
    if (k < 2) throw config_error("synthetic generator requires k >= 2");
    if (!(s > 0)) throw config_error("synthetic generator requires s > 0");
    if (sigma_xi2 < 0) throw config_error("synthetic generator requires sigma_xi2 >= 0");
}

SampleSet gen_synthetic(const SyntheticConfig& cfg) {
    return gen_synthetic_with_label_seed(cfg, derive_stream(cfg.seed, kStreamLabels));
}

SampleSet gen_synthetic_with_label_seed(const SyntheticConfig& cfg, std::uint64_t label_seed) {
    const SyntheticDraw draw = synthetic_draw(cfg);
    SampleSet out;
    out.x = draw.raw_x / std::sqrt(static_cast<double>(cfg.d));
    out.y.resize(cfg.n);
    NormalStream labels(label_seed);
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        const double prob = stable_sigmoid(draw.logits[i]);
        out.y[i] = labels.next_uniform() < prob ? 1 : -1;
    }
    nlohmann::json meta;
    meta["kind"] = "synthetic";
    meta["n"] = cfg.n;
    meta["d"] = cfg.d;
    meta["s"] = cfg.s;
    meta["sigma_xi2"] = cfg.sigma_xi2;
    meta["k"] = cfg.k;
    meta["seed"] = cfg.seed;
    out.provenance = meta.dump();
    return out;
}

Eigen::VectorXd synthetic_label_probabilities(const SyntheticConfig& cfg) {
    const SyntheticDraw draw = synthetic_draw(cfg);
    Eigen::VectorXd probs(cfg.n);
    for (Eigen::Index i = 0; i < cfg.n; ++i) probs[i] = stable_sigmoid(draw.logits[i]);
    return probs;
}

std::pair<SampleSet, SampleSet> split(const SampleSet& data, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw input_error("split fraction must be in (0,1)");
    const Eigen::Index n = data.size();
    const Eigen::Index n1 = static_cast<Eigen::Index>(
        std::ceil(fraction * static_cast<double>(n)));
    if (n1 < 1 || n - n1 < 1) throw input_error("split produces a degenerate part");

    const std::vector<std::size_t> order = shuffled_indices(static_cast<std::size_t>(n), seed);
    SampleSet first, second;
    first.x.resize(n1, data.x.cols());
    first.y.resize(n1);
    second.x.resize(n - n1, data.x.cols());
    second.y.resize(n - n1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]);
        if (i < n1) {
            first.x.row(i) = data.x.row(src);
            first.y[i] = data.y[src];
        } else {
            second.x.row(i - n1) = data.x.row(src);
            second.y[i - n1] = data.y[src];
        }
    }
    first.provenance = data.provenance;
    second.provenance = data.provenance;
    return {first, second};
}

IdxFile read_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open IDX file: " + path);

    auto read_u32 = [&in, &path]() -> std::uint32_t {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4))
            throw format_error("truncated IDX header: " + path);
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
               (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
    };

    const std::uint32_t magic = read_u32();
    if ((magic & 0xFFFFFF00u) != 0x00000800u)
        throw format_error("bad IDX magic number in " + path);
    const int ndims = static_cast<int>(magic & 0xFFu);
    if (ndims < 1 || ndims > 4) throw format_error("unsupported IDX rank in " + path);

    IdxFile idx;
    std::size_t total = 1;
    for (int i = 0; i < ndims; ++i) {
        idx.dims.push_back(read_u32());
        total *= idx.dims.back();
    }
    idx.data.resize(total);
    if (!in.read(reinterpret_cast<char*>(idx.data.data()), static_cast<std::streamsize>(total)))
        throw format_error("truncated IDX payload in " + path);
    char extra;
    if (in.read(&extra, 1)) throw format_error("trailing bytes after IDX payload in " + path);
    return idx;
}

void write_idx(const std::string& path, const IdxFile& idx) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open for writing: " + path);
    auto write_u32 = [&out](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    write_u32(0x00000800u | static_cast<std::uint32_t>(idx.dims.size()));
    std::size_t total = 1;
    for (std::uint32_t d : idx.dims) {
        write_u32(d);
        total *= d;
    }
    if (total != idx.data.size()) throw input_error("IDX dims do not match payload size");
    out.write(reinterpret_cast<const char*>(idx.data.data()),
              static_cast<std::streamsize>(idx.data.size()));
}

SampleSet load_mnist_binary(const std::string& image_path, const std::string& label_path,
                            std::pair<int, int> classes) {
    const IdxFile images = read_idx(image_path);
    const IdxFile labels = read_idx(label_path);
    if (images.dims.size() != 3) throw format_error("image IDX must have rank 3: " + image_path);
    if (labels.dims.size() != 1) throw format_error("label IDX must have rank 1: " + label_path);
    if (images.dims[0] != labels.dims[0])
        throw format_error("image/label count mismatch between " + image_path + " and " + label_path);

    const std::size_t count = images.dims[0];
    const std::size_t pixels = static_cast<std::size_t>(images.dims[1]) * images.dims[2];

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < count; ++i) {
        const int lab = labels.data[i];
        if (lab == classes.first || lab == classes.second) keep.push_back(i);
    }

    SampleSet out;
    out.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(pixels));
    out.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const std::size_t i = keep[r];
        double sq = 0.0;
        for (std::size_t q = 0; q < pixels; ++q) {
            const double v = images.data[i * pixels + q] / 255.0;
            out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = v;
            sq += v * v;
        }
        const double scale = std::max(1.0, std::sqrt(sq));
        out.x.row(static_cast<Eigen::Index>(r)) /= scale;
        out.y[static_cast<Eigen::Index>(r)] = labels.data[i] == classes.first ? 1 : -1;
    }

    nlohmann::json meta;
    meta["kind"] = "mnist_binary";
    meta["image_path"] = image_path;
    meta["label_path"] = label_path;
    meta["image_digest"] = file_digest(image_path);
    meta["label_digest"] = file_digest(label_path);
    meta["positive_digit"] = classes.first;
    meta["negative_digit"] = classes.second;
    meta["kept"] = keep.size();
    out.provenance = meta.dump();
    return out;
}

void save_samples_csv(const std::string& path, const SampleSet& data) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    out << "y";
    for (int j = 0; j < data.dim(); ++j) out << ",x_" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        out << data.y[i];
        for (int j = 0; j < data.dim(); ++j) out << "," << format_double(data.x(i, j));
        out << "\n";
    }
    std::ofstream side(path + ".json");
    if (!side) throw input_error("cannot open for writing: " + path + ".json");
    side << (data.provenance.empty() ? "{}" : data.provenance);
}

SampleSet load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw format_error("empty CSV: " + path);
    const Eigen::Index d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) ;
    std::vector<double> values;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        if (!std::getline(ss, field, ',')) throw format_error("bad CSV row in " + path);
        labels.push_back(std::stoi(field));
        Eigen::Index got = 0;
        while (std::getline(ss, field, ',')) {
            values.push_back(std::stod(field));
            ++got;
        }
        if (got != d) throw format_error("ragged CSV row in " + path);
    }
    SampleSet out;
    out.y.resize(static_cast<Eigen::Index>(labels.size()));
    out.x.resize(static_cast<Eigen::Index>(labels.size()), d);
    for (Eigen::Index i = 0; i < out.y.size(); ++i) {
        out.y[i] = labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j)
            out.x(i, j) = values[static_cast<std::size_t>(i * d + j)];
    }
    std::ifstream side(path + ".json");
    if (side)
        out.provenance.assign((std::istreambuf_iterator<char>(side)),
                              std::istreambuf_iterator<char>());
    return out;
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open: " + path);
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001B3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return hash;
}

} // namespace kan
