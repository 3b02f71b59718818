#include "kan/loss.hpp"

#include <cmath>

namespace kan {

LossJet loss_jet(double u) {
    LossJet jet;
    // softplus(-u), with the shift trick so exp never overflows
    jet.value = u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
    const double s = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
    jet.d1 = s - 1.0;       // -sigmoid(-u)
    jet.d2 = s * (1.0 - s); // sigmoid'(u)
    return jet;
}

BatchLoss batch_loss(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                     bool want_grad) {
    if (data.size() < 1) throw input_error("empty dataset");
    if (data.dim() != spec.d) throw input_error("dataset dimension mismatch");

    BatchLoss out;
    const Eigen::Index n = data.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd f;
    if (want_grad) {
        auto weight = [&](Eigen::Index i, double fi) {
            // d/dTheta of (1/n) l(y_i f_i) contributes l'(y_i f_i) * y_i / n.
            return loss_jet(data.y[i] * fi).d1 * data.y[i] * inv_n;
        };
        batch_forward_and_grad(spec, params, data.x, f, weight, &out.grad);
        out.has_grad = true;
    } else {
        f = batch_forward(spec, params, data.x);
    }

    out.margins.resize(n);
    Eigen::Index correct = 0;
    double risk = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double margin = data.y[i] * f[i];
        out.margins[i] = margin;
        risk += loss_jet(margin).value;
        if (margin > 0.0) ++correct;
    }
    out.risk = risk * inv_n;
    out.accuracy = static_cast<double>(correct) * inv_n;
    return out;
}

double empirical_risk(const ModelSpec& spec, const ParamVector& params, const SampleSet& data) {
    return batch_loss(spec, params, data, false).risk;
}

double accuracy(const ModelSpec& spec, const ParamVector& params, const SampleSet& data) {
    return batch_loss(spec, params, data, false).accuracy;
}

} // namespace kan
