#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kan/data.hpp"
#include "kan/rng.hpp"

using namespace kan;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("synthetic generation basics") {
    SyntheticConfig cfg;
    cfg.n = 500;
    cfg.d = 10;
    cfg.seed = 42;

    const SampleSet data = gen_synthetic(cfg);
    CHECK(data.size() == 500);
    CHECK(data.dim() == 10);
    data.validate();
    for (Eigen::Index i = 0; i < data.size(); ++i) CHECK(data.x.row(i).norm() <= 1.0 + 1e-12);

    SUBCASE("same seed is bit-identical") {
        const SampleSet again = gen_synthetic(cfg);
        CHECK((again.x - data.x).cwiseAbs().maxCoeff() == 0.0);
        CHECK((again.y - data.y).cwiseAbs().maxCoeff() == 0);
    }

    SUBCASE("different seed differs") {
        SyntheticConfig other = cfg;
        other.seed = 43;
        CHECK((gen_synthetic(other).x - data.x).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("vanishing signal gives balanced labels") {
    SyntheticConfig cfg;
    cfg.n = 4000;
    cfg.d = 5;
    cfg.s = 1e-9;
    cfg.sigma_xi2 = 0.0;
    cfg.seed = 7;
    const SampleSet data = gen_synthetic(cfg);
    const double positive =
        static_cast<double>((data.y.array() == 1).count()) / static_cast<double>(data.size());
    CHECK(std::abs(positive - 0.5) <= 5.0 / std::sqrt(static_cast<double>(cfg.n)));
}

TEST_CASE("label frequencies follow the generator probabilities") {
    SyntheticConfig cfg;
    cfg.n = 60;
    cfg.d = 4;
    cfg.s = 2.0;
    cfg.sigma_xi2 = 0.0;
    cfg.seed = 11;
    const Eigen::VectorXd probs = synthetic_label_probabilities(cfg);

    const int draws = 600;
    Eigen::VectorXd hits = Eigen::VectorXd::Zero(cfg.n);
    for (int r = 0; r < draws; ++r) {
        const SampleSet data = gen_synthetic_with_label_seed(cfg, 9000 + r);
        for (Eigen::Index i = 0; i < cfg.n; ++i)
            if (data.y[i] == 1) hits[i] += 1.0;
    }
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        const double freq = hits[i] / draws;
        const double sd = std::sqrt(probs[i] * (1.0 - probs[i]) / draws);
        CHECK(std::abs(freq - probs[i]) <= 3.0 * sd + 1e-3);
    }
}

TEST_CASE("split sizes, determinism and multiset preservation") {
    SyntheticConfig cfg;
    cfg.n = 10;
    cfg.d = 3;
    cfg.seed = 5;
    const SampleSet data = gen_synthetic(cfg);

    const auto [a, b] = split(data, 0.8, 99);
    CHECK(a.size() == 8);
    CHECK(b.size() == 2);

    const auto [a2, b2] = split(data, 0.8, 99);
    CHECK((a.x - a2.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.y - b2.y).cwiseAbs().maxCoeff() == 0);

    // union of parts is the original multiset (match rows by full content)
    std::vector<bool> used(static_cast<std::size_t>(data.size()), false);
    auto find_row = [&](const Eigen::RowVectorXd& row, int label) {
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            if (data.y[i] == label && (data.x.row(i) - row).cwiseAbs().maxCoeff() == 0.0) {
                used[static_cast<std::size_t>(i)] = true;
                return true;
            }
        }
        return false;
    };
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(find_row(a.x.row(i), a.y[i]));
    for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(find_row(b.x.row(i), b.y[i]));

    CHECK_THROWS_AS(split(data, 0.0, 1), input_error);
    CHECK_THROWS_AS(split(data, 1.0, 1), input_error);
    CHECK_THROWS_AS(split(data, 0.99, 1), input_error); // empty second part
}

namespace {

/// Tiny IDX pair: count images of side x side with the given labels.
void write_idx_pair(const std::string& img_path, const std::string& lab_path,
                    const std::vector<std::uint8_t>& labels, int side,
                    std::uint8_t fill_base) {
    IdxFile images;
    images.dims = {static_cast<std::uint32_t>(labels.size()), static_cast<std::uint32_t>(side),
                   static_cast<std::uint32_t>(side)};
    images.data.resize(labels.size() * static_cast<std::size_t>(side) * side);
    for (std::size_t i = 0; i < images.data.size(); ++i)
        images.data[i] = static_cast<std::uint8_t>((fill_base + i * 7) % 251);
    write_idx(img_path, images);

    IdxFile lab;
    lab.dims = {static_cast<std::uint32_t>(labels.size())};
    lab.data = labels;
    write_idx(lab_path, lab);
}

} // namespace

TEST_CASE("IDX round-trip and format errors") {
    const std::string img = temp_path("kan_test_images_idx");
    const std::string lab = temp_path("kan_test_labels_idx");
    write_idx_pair(img, lab, {0, 1, 2, 1, 0, 7}, 4, 13);

    SUBCASE("parse and re-serialize is byte-identical") {
        const IdxFile parsed = read_idx(img);
        CHECK(parsed.dims.size() == 3);
        CHECK(parsed.dims[0] == 6);
        const std::string copy = temp_path("kan_test_images_copy_idx");
        write_idx(copy, parsed);
        std::ifstream f1(img, std::ios::binary), f2(copy, std::ios::binary);
        const std::string b1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
        const std::string b2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
        CHECK(b1 == b2);
        const IdxFile reparsed = read_idx(copy);
        CHECK(reparsed.data == parsed.data);
        std::remove(copy.c_str());
    }

    SUBCASE("binary restriction, mapping and normalization") {
        const SampleSet data = load_mnist_binary(img, lab, {0, 1});
        CHECK(data.size() == 4); // labels 0,1,1,0 kept
        CHECK(data.dim() == 16);
        CHECK(data.y[0] == 1);  // digit 0 -> +1
        CHECK(data.y[1] == -1); // digit 1 -> -1
        for (Eigen::Index i = 0; i < data.size(); ++i)
            CHECK(data.x.row(i).norm() <= 1.0 + 1e-12);
        data.validate();
    }

    SUBCASE("bad magic is a format error") {
        const std::string bad = temp_path("kan_test_bad_magic");
        std::ofstream out(bad, std::ios::binary);
        const char junk[8] = {1, 2, 3, 4, 5, 6, 7, 8};
        out.write(junk, 8);
        out.close();
        CHECK_THROWS_AS((void)read_idx(bad), format_error);
        std::remove(bad.c_str());
    }

    SUBCASE("truncated payload is a format error") {
        const std::string cut = temp_path("kan_test_truncated_idx");
        std::ifstream src(img, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(src)), std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 5);
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS((void)read_idx(cut), format_error);
        std::remove(cut.c_str());
    }

    SUBCASE("count mismatch is a format error") {
        const std::string lab2 = temp_path("kan_test_labels2_idx");
        IdxFile short_labels;
        short_labels.dims = {3};
        short_labels.data = {0, 1, 0};
        write_idx(lab2, short_labels);
        CHECK_THROWS_AS((void)load_mnist_binary(img, lab2), format_error);
        std::remove(lab2.c_str());
    }

    std::remove(img.c_str());
    std::remove(lab.c_str());
}

TEST_CASE("samples CSV round-trip") {
    SyntheticConfig cfg;
    cfg.n = 25;
    cfg.d = 4;
    cfg.seed = 77;
    const SampleSet data = gen_synthetic(cfg);
    const std::string path = temp_path("kan_test_samples.csv");
    save_samples_csv(path, data);
    const SampleSet back = load_samples_csv(path);
    CHECK(back.size() == data.size());
    CHECK(back.dim() == data.dim());
    CHECK((back.x - data.x).cwiseAbs().maxCoeff() == 0.0); // shortest round-trip formatting
    CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0);
    CHECK(back.provenance == data.provenance);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("config validation") {
    SyntheticConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.n = 5;
    cfg.k = 1;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.k = 40;
    cfg.s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}
