#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kan/loss.hpp"
#include "kan/model.hpp"

namespace kan {

struct GDConfig {
    double eta = 1.0;
    int T = 100;
    int record_every = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrajectoryRow {
    int iter = 0;
    double train_loss = 0;
    double test_loss = std::numeric_limits<double>::quiet_NaN();
    double train_acc = 0;
    double test_acc = std::numeric_limits<double>::quiet_NaN();
    double drift_init = 0;    // ||Theta(k) - Theta(0)||_2
    double max_c_drift = 0;   // max_j ||c_j(k) - c_j(0)||_2
    double grad_norm = 0;     // ||grad L_S(Theta(k))||_2
    double cum_loss = 0;      // sum_{t<=k} L_S(Theta(t)), exact at any stride
    double noise_norm = std::numeric_limits<double>::quiet_NaN(); // DP runs only
    double dist_to_ref = std::numeric_limits<double>::quiet_NaN(); // set when a reference point was supplied
};

/// Per-run record of training diagnostics. Carries the run constants needed
/// to re-analyze a finished run (c-drift bound, descent certification)
/// without retraining.
struct TrajectoryLog {
    double eta = 0;
    int m = 0;
    int p = 0;
    double basis_value_bound = 0; // B_b of the configured basis
    std::vector<TrajectoryRow> rows;

    /// Columns: iter,train_loss,test_loss,train_acc,test_acc,drift_init,
    /// max_c_drift,grad_norm,cum_loss,noise_norm (noise empty for GD).
    void write_csv(std::ostream& out) const;
    void save_csv(const std::string& path) const;
};

enum class TrainStatus { Ok, Diverged };

struct GDResult {
    ParamVector params;
    TrajectoryLog log;
    TrainStatus status = TrainStatus::Ok;
    std::string error;
};

/// One full-batch GD step Theta - eta * grad L_S(Theta).
ParamVector gd_step(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                    double eta);

/// Full-batch GD from the Gaussian initialization. test may be null;
/// ref_point (when given) only populates the per-row distance used by the
/// stay-in-a-ball diagnostics.
GDResult train_gd(const ModelSpec& spec, const SampleSet& train, const SampleSet* test,
                  const GDConfig& cfg, const ParamVector* ref_point = nullptr);

/// Comparator parameters for the reference-point diagnostics:
/// complexity = 2*eta*T*L_S(theta_star) + lambda^2.
struct ReferencePoint {
    ParamVector theta_star;
    double lambda = 0;
    double complexity = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsReport {
    int monotonicity_violations = 0;
    double max_drift = 0;
    /// max over rows of max_c_drift - (eta*B_b*sqrt(p)/sqrt(m)) * sum_{t<k} L_S(t);
    /// the coefficient-drift bound holds iff this is <= 0 (up to tolerance).
    double max_c_drift_residual = -std::numeric_limits<double>::infinity();
    bool ref_provided = false;
    bool stayed_within_sqrt2_lambda = true;
    bool stayed_within_3_lambda = true;
    /// (1/T) sum_k L_S(Theta(k)) divided by complexity/(eta*T).
    double bound_usage_ratio = std::numeric_limits<double>::quiet_NaN();
};

DiagnosticsReport diagnose_trajectory(const TrajectoryLog& log,
                                      const ReferencePoint* ref = nullptr);

} // namespace kan
