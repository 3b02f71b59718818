#pragma once

#include <string>

#include <Eigen/Core>

#include "kan/data.hpp"
#include "kan/gd.hpp"
#include "kan/model.hpp"

namespace kan {

/// NTK features at initialization: row i = grad f_{Theta(0)}(x_i) in the
/// flat parameter order.
struct NTKFeatures {
    Eigen::MatrixXd phi; // n x param_count
};

NTKFeatures ntk_features(const ModelSpec& spec, const ParamVector& params0,
                         const SampleSet& data);

struct MarginResult {
    double gamma_hat = 0;    // min_i y_i <phi_i, theta0>, recomputed from raw features
    Eigen::VectorXd theta0;  // unit direction
    bool separable = false;  // gamma_hat > tol
};

/// Hard-margin direction via projected subgradient ascent on the concave
/// min-margin objective, initialized from the mean of y_i phi_i. The
/// returned gamma_hat is always recomputed from the features, never taken
/// from optimizer state.
MarginResult estimate_margin(const Eigen::MatrixXd& phi, const Eigen::VectorXi& y,
                             int iters = 2000, double tol = 1e-6);

/// tau = (log T + sqrt(log(n/delta))) / gamma, the comparator-shift recipe
/// with all suppressed constants set to 1.
double suggest_tau(double gamma, Eigen::Index n, int T, double delta);

/// Theta* = Theta(0) + tau * theta0 with lambda = tau; complexity is filled
/// by finalize_reference_complexity once L_S(Theta*) is known.
ReferencePoint reference_point(const ModelSpec& spec, const ParamVector& params0,
                               const MarginResult& margin, double tau);

void finalize_reference_complexity(ReferencePoint& ref, double eta, int T, double loss_at_star);

std::string margin_result_to_json(const MarginResult& result, double tau_suggested);

} // namespace kan
