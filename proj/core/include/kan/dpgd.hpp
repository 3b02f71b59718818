#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "kan/gd.hpp"
#include "kan/loss.hpp"
#include "kan/model.hpp"
#include "kan/rng.hpp"

namespace kan {

struct DPConfig {
    double epsilon = 2.0;
    double delta = 5e-4; // default 1/n is applied by callers that know n
    int T = 100;
    double eta = 1.0;
    double r1 = 1.0; // radius of Omega_a around a(0)
    double r2 = 1.0; // radius of Omega_c around c(0)
    std::uint64_t seed_init = 0;
    std::uint64_t seed_noise = 0;
    int record_every = 1;

    void validate() const;
};

/// Gaussian-mechanism calibration for the projected DP-GD updates:
///   sigma_tilde2 = T (1 + log(2T/delta)/epsilon) / (n^2 epsilon)
///   c1 = 8 (B'_l B'_s B'_b B_b)^2 p^2 (4 sqrt(p) + (2 sqrt(log(2/delta)) + R2)/sqrt(m))^2
///   c2 = 8 (B'_l B_b)^2 p
///   sigma1_2 = c1 * sigma_tilde2,  sigma2_2 = c2 * sigma_tilde2
/// together with the gradient sensitivities (delta_a, delta_c) they derive from.
struct NoiseCalibration {
    double epsilon = 0;
    double delta = 0;
    int T = 0;
    Eigen::Index n = 0;
    double sigma_tilde2 = 0;
    double c1 = 0;
    double c2 = 0;
    double sigma1_2 = 0;
    double sigma2_2 = 0;
    double delta_a = 0;
    double delta_c = 0;

    std::string to_json() const;
};

/// l2-sensitivities of the full-batch gradient blocks under one-sample
/// replacement, valid while c stays in Omega_c = B(c(0), r2) and the
/// initialization event ||c(0)|| <= 4 sqrt(pm) + 2 sqrt(log(2/delta)) holds:
///   delta_c = 2 B'_l B_b sqrt(p) / n
///   delta_a = (2 B'_l B'_s B'_b B_b p / n)(4 sqrt(p) + (2 sqrt(log(2/delta)) + r2)/sqrt(m))
std::pair<double, double> sensitivities(const BoundConstants& bounds, int p, int m,
                                        Eigen::Index n, double r2, double delta);

NoiseCalibration calibrate_noise(const DPConfig& cfg, const ModelSpec& spec, Eigen::Index n);

/// Euclidean projection onto the closed ball B(center, radius).
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, const Eigen::VectorXd& center,
                             double radius);

/// In-place variant on a whole coefficient block (Frobenius ball).
void project_ball_inplace(Eigen::MatrixXd& v, const Eigen::MatrixXd& center, double radius);

/// Explicit (no suppressed constants) smoothness/curvature bounds assembled
/// from the boundedness constants and the norms of c(0), valid for any Theta
/// with per-unit c-drift at most r_c:
///   grad_sup   >= sup_x ||grad f||,  hess_sup >= sup_x ||hess f||,
///   rho_hat    =  grad_sup^2 + hess_sup
///     (so lambda_max(hess L_S) <= rho_hat and ||grad L_S||^2 <= 2 rho_hat L_S),
///   kappa_hat  =  sqrt(m) * hess_sup
///     (so lambda_min(hess L_S) >= -kappa_hat L_S / sqrt(m)).
struct TheoryConstants {
    double grad_sup = 0;
    double hess_sup = 0;
    double rho_hat = 0;
    double kappa_hat = 0;

    /// From the observed initialization norms (deterministically valid).
    static TheoryConstants assemble(const BoundConstants& bounds, int p, int m,
                                    double c0_norm, double max_unit_c0_norm, double r_c);
    /// From the concentration bounds on ||c(0)|| at confidence delta.
    static TheoryConstants assemble_probabilistic(const BoundConstants& bounds, int p, int m,
                                                  double delta, double r_c);
};

struct DpStepResult {
    ParamVector params;
    double noise_a_norm = 0;
    double noise_c_norm = 0;
};

/// One projected noisy update (Algorithm-style): Gaussian noise is added to
/// each gradient block, then the blocks are projected back onto the balls
/// around the initialization.
DpStepResult dpgd_step(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                       double eta, const NoiseCalibration& calib, const ParamVector& center,
                       double r1, double r2, NormalStream& noise);

struct DpResult {
    ParamVector params; // Theta_priv = final iterate
    TrajectoryLog log;
    NoiseCalibration calibration;
    TrainStatus status = TrainStatus::Ok;
    std::string error;
    double traj_avg_test_loss = std::numeric_limits<double>::quiet_NaN();
    bool c0_event_held = false; // ||c(0)|| <= 4 sqrt(pm) + 2 sqrt(log(2/delta))
    double max_a_block_drift = 0; // max_k ||a(k) - a(0)||_2 over the whole run
    double max_c_block_drift = 0; // max_k ||c(k) - c(0)||_2 over the whole run
};

/// Projected DP-GD with dedicated initialization and noise streams. Noise
/// for iteration k is drawn from a stream keyed by (seed_noise, k), so the
/// trajectory is reproducible independent of scheduling. With
/// noise_enabled=false this is projected (noise-free) GD with the same
/// initialization and projection sets.
DpResult train_dpgd(const ModelSpec& spec, const SampleSet& train, const SampleSet* test,
                    const DPConfig& cfg, bool noise_enabled = true);

} // namespace kan
