#pragma once

#include <Eigen/Core>

#include "kan/data.hpp"
#include "kan/model.hpp"

namespace kan {

/// Logistic loss l(u) = log(1 + exp(-u)) and its Assumption-style constants:
/// |l'| <= 1, l'' <= 1/4, and the self-bound |l'(u)| <= l(u).
struct LossSpec {
    static constexpr double deriv1_bound = 1.0;  // B'_l
    static constexpr double deriv2_bound = 0.25; // B''_l
    static constexpr double self_bound = 1.0;    // alpha_l
};

struct LossJet {
    double value = 0;
    double d1 = 0;
    double d2 = 0;
};

/// (l(u), l'(u), l''(u)) evaluated in overflow-safe form for large |u|.
LossJet loss_jet(double u);

/// L_S(Theta) = (1/n) sum_i l(y_i f(x_i)).
double empirical_risk(const ModelSpec& spec, const ParamVector& params, const SampleSet& data);

/// Fraction of samples with y_i f(x_i) > 0; ties count as errors.
double accuracy(const ModelSpec& spec, const ParamVector& params, const SampleSet& data);

/// One full-batch evaluation: risk, accuracy, margins y_i f_i, and (when
/// want_grad) the gradient of L_S.
struct BatchLoss {
    double risk = 0;
    double accuracy = 0;
    Eigen::VectorXd margins; // y_i * f(x_i)
    ParamVector grad;        // valid when computed with want_grad
    bool has_grad = false;
};

BatchLoss batch_loss(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                     bool want_grad);

} // namespace kan
