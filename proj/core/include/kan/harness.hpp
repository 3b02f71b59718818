#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kan/data.hpp"
#include "kan/dpgd.hpp"
#include "kan/gd.hpp"
#include "kan/model.hpp"

namespace kan {

enum class Task { Synth, Mnist };
enum class Mode { Gd, Dpgd };
enum class SweepAxis { Width, Iters };

/// One width/iteration sweep: one training run per (axis value, seed).
/// For SweepAxis::Width the axis values are hidden widths m and gd.T / dp.T
/// stay fixed; for SweepAxis::Iters they are iteration counts T and the
/// width stays at `m`.
struct SweepConfig {
    Task task = Task::Synth;
    Mode mode = Mode::Gd;
    SweepAxis axis = SweepAxis::Width;
    std::vector<int> axis_values;
    std::vector<std::uint64_t> seeds;

    int m = 32;
    int p = 8;
    BasisFamily basis_family = BasisFamily::CubicBspline;
    ActivationFamily activation = ActivationFamily::Tanh;

    GDConfig gd;          // mode == Gd
    DPConfig dp;          // mode == Dpgd; delta <= 0 means "use 1/n"
    SyntheticConfig synth; // synth.n = training size per run
    Eigen::Index synth_test_n = 800;
    std::string mnist_dir; // task == Mnist: directory with the four IDX files

    std::string output_path; // base path for emit_report
    double change_point_fraction = 0.1;
    int workers = 0; // 0 = hardware concurrency

    void validate() const;
    static SweepConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct RunRow {
    int axis_value = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_train_loss = 0;
    double final_test_loss = 0;
    double final_train_acc = 0;
    double final_test_acc = 0;
    double traj_avg_test_loss = 0; // DP mode only (NaN otherwise)
    double wall_seconds = 0;       // informational; never written to the CSVs
};

struct AxisAggregate {
    int axis_value = 0;
    int n_ok = 0;
    int n_failed = 0;
    double mean_train_loss = 0, se_train_loss = 0;
    double mean_test_loss = 0, se_test_loss = 0;
    double mean_train_acc = 0, se_train_acc = 0;
    double mean_test_acc = 0, se_test_acc = 0;
    double mean_traj_avg_test_loss = 0, se_traj_avg_test_loss = 0;
    bool change_point = false;
};

struct SweepResult {
    SweepConfig config;
    std::vector<RunRow> rows;            // |axis_values| x |seeds|, axis-major order
    std::vector<AxisAggregate> aggregates;
};

SweepResult run_sweep(const SweepConfig& cfg);

/// Aggregates raw rows per axis value (exposed so tests can cross-check).
std::vector<AxisAggregate> aggregate_rows(const SweepConfig& cfg,
                                          const std::vector<RunRow>& rows);

/// Index of the axis value after which every subsequent mean improvement is
/// below fraction * (max - min); K-1 at the latest.
int change_point_index(const std::vector<double>& means, double fraction);

/// Writes <base>.raw.csv and <base>.agg.csv.
void emit_report(const SweepResult& result, const std::string& base_path);

} // namespace kan
