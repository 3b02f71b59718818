#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kan/data.hpp"
#include "kan/model.hpp"

namespace kan {

enum class VerifyLevel { Fast, Full };

struct CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0; // slack inside the tolerance; negative when failing
    std::string detail;
};

struct VerificationReport {
    VerifyLevel level = VerifyLevel::Fast;
    std::vector<CheckResult> checks;

    bool all_passed() const;
    void print(std::ostream& out) const; // one pass/fail line per check
};

/// Runs the cross-module invariant suite. Fast keeps to structural checks
/// and small fixtures; Full adds the sensitivity audit, noise Monte Carlo,
/// curvature scaling and a desk-scale descent run.
VerificationReport run_verification(VerifyLevel level);

/// Individual checks, exposed for tests and for composing reports.
namespace checks {

struct GradCheckOptions {
    int instances = 50;
    int max_dim = 8;
    std::uint64_t seed = 20240001;
    double tolerance = 1e-5;
    /// Test hook: scales the analytic a-block by (1 + corrupt_a); a corrupted
    /// gradient must trip the finite-difference oracle.
    double corrupt_a = 0.0;
};

CheckResult basis_partition_of_unity();
CheckResult basis_nonnegativity();
CheckResult basis_jet_consistency();
CheckResult basis_clamping();
CheckResult basis_bounds_dominate();
CheckResult activation_jet_consistency();
CheckResult loss_assumption_grid();
CheckResult loss_jet_consistency();
CheckResult model_gradient_fd(const GradCheckOptions& opt = {});
CheckResult model_hessian_fd(int instances = 20, std::uint64_t seed = 20240002);
CheckResult model_output_scaling();
CheckResult model_init_statistics();
CheckResult calibration_identities();
CheckResult projection_properties();
CheckResult margin_honesty();
CheckResult gd_descent_and_drift(Eigen::Index n, int m, int p, double eta, int T,
                                 std::uint64_t seed);
CheckResult dp_projection_invariant();
CheckResult dp_zero_noise_reduction_small();
CheckResult dp_gradient_self_bound();
CheckResult dp_noise_tolerance_admissible_eta();
CheckResult curvature_lower_bound();
CheckResult curvature_scaling(); // Full
CheckResult sensitivity_audit(int pairs, Eigen::Index n, int m, std::uint64_t seed); // Full
CheckResult noise_norm_monte_carlo(); // Full

/// Dense Hessian of L_S (verification scale only).
Eigen::MatrixXd loss_hessian_dense(const ModelSpec& spec, const ParamVector& params,
                                   const SampleSet& data);

} // namespace checks

} // namespace kan
