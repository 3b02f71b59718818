#include "kan/ntk.hpp"

#include <cmath>

#include <json.hpp>

namespace kan {

NTKFeatures ntk_features(const ModelSpec& spec, const ParamVector& params0,
                         const SampleSet& data) {
    if (data.dim() != spec.d) throw input_error("ntk_features: dimension mismatch");
    NTKFeatures features;
    features.phi.resize(data.size(), spec.param_count());
    for (Eigen::Index i = 0; i < data.size(); ++i)
        features.phi.row(i) = grad_f(spec, params0, data.x.row(i)).flatten();
    return features;
}

namespace {

double min_margin(const Eigen::MatrixXd& phi, const Eigen::VectorXi& y,
                  const Eigen::VectorXd& w, Eigen::Index* argmin = nullptr) {
    const Eigen::VectorXd scores = phi * w;
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        const double margin = y[i] * scores[i];
        if (margin < best) {
            best = margin;
            at = i;
        }
    }
    if (argmin) *argmin = at;
    return best;
}

} // namespace

MarginResult estimate_margin(const Eigen::MatrixXd& phi, const Eigen::VectorXi& y,
                             int iters, double tol) {
    const Eigen::Index n = phi.rows();
    if (n < 2) throw input_error("estimate_margin: need at least two samples");
    bool has_pos = false, has_neg = false;
    for (Eigen::Index i = 0; i < n; ++i) (y[i] > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw input_error("estimate_margin: both classes required");

    Eigen::VectorXd w = Eigen::VectorXd::Zero(phi.cols());
    for (Eigen::Index i = 0; i < n; ++i) w += y[i] * phi.row(i).transpose();
    if (w.norm() == 0.0) w = phi.row(0).transpose();
    if (w.norm() == 0.0) {
        w.setZero();
        w[0] = 1.0;
    }
    w.normalize();

    double max_row = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) max_row = std::max(max_row, phi.row(i).norm());
    const double step0 = max_row > 0 ? 1.0 / max_row : 1.0;

    Eigen::VectorXd best_w = w;
    double best_gamma = min_margin(phi, y, w);
    for (int t = 1; t <= iters; ++t) {
        Eigen::Index worst = 0;
        const double gamma = min_margin(phi, y, w, &worst);
        if (gamma > best_gamma) {
            best_gamma = gamma;
            best_w = w;
        }
        w += (step0 / std::sqrt(static_cast<double>(t))) * y[worst] * phi.row(worst).transpose();
        const double norm = w.norm();
        if (norm > 0) w /= norm;
    }

    MarginResult result;
    result.theta0 = best_w;
    result.gamma_hat = min_margin(phi, y, best_w);
    result.separable = result.gamma_hat > tol;
    return result;
}

double suggest_tau(double gamma, Eigen::Index n, int T, double delta) {
    if (!(gamma > 0)) throw input_error("suggest_tau: gamma must be positive");
    return (std::log(static_cast<double>(T)) +
            std::sqrt(std::log(static_cast<double>(n) / delta))) /
           gamma;
}

ReferencePoint reference_point(const ModelSpec& spec, const ParamVector& params0,
                               const MarginResult& margin, double tau) {
    if (!(tau > 0)) throw input_error("reference_point: tau must be positive");
    if (!margin.separable) throw input_error("reference_point: margin result is not separable");
    if (margin.theta0.size() != spec.param_count())
        throw input_error("reference_point: direction dimension mismatch");

    ReferencePoint ref;
    const ParamVector shift = ParamVector::unflatten(spec, margin.theta0);
    ref.theta_star = params0;
    ref.theta_star.axpy(tau, shift);
    ref.lambda = tau; // ||theta0|| = 1 by construction
    return ref;
}

void finalize_reference_complexity(ReferencePoint& ref, double eta, int T, double loss_at_star) {
    ref.complexity = 2.0 * eta * static_cast<double>(T) * loss_at_star + ref.lambda * ref.lambda;
}

std::string margin_result_to_json(const MarginResult& result, double tau_suggested) {
    nlohmann::json doc;
    doc["gamma_hat"] = result.gamma_hat;
    doc["separable"] = result.separable;
    doc["tau_suggested"] = tau_suggested;
    return doc.dump(2);
}

} // namespace kan
