#include "kan/dpgd.hpp"

#include <cmath>

#include <json.hpp>

namespace kan {

void DPConfig::validate() const {
    if (!(epsilon > 0)) throw config_error("dp-gd requires epsilon > 0");
    if (!(delta > 0 && delta < 1)) throw config_error("dp-gd requires delta in (0,1)");
    if (T < 1) throw config_error("dp-gd requires T >= 1");
    if (!(eta > 0)) throw config_error("dp-gd requires eta > 0");
    if (!(r1 > 0 && r2 > 0)) throw config_error("dp-gd requires positive projection radii");
    if (record_every < 1) throw config_error("dp-gd requires record_every >= 1");
}

std::string NoiseCalibration::to_json() const {
    nlohmann::json doc;
    doc["epsilon"] = epsilon;
    doc["delta"] = delta;
    doc["T"] = T;
    doc["n"] = n;
    doc["sigma_tilde2"] = sigma_tilde2;
    doc["C1"] = c1;
    doc["C2"] = c2;
    doc["sigma1_2"] = sigma1_2;
    doc["sigma2_2"] = sigma2_2;
    doc["delta_a"] = delta_a;
    doc["delta_c"] = delta_c;
    return doc.dump(2);
}

std::pair<double, double> sensitivities(const BoundConstants& bounds, int p, int m,
                                        Eigen::Index n, double r2, double delta) {
    if (n < 1) throw input_error("sensitivities: n >= 1 required");
    const double pd = static_cast<double>(p);
    const double nd = static_cast<double>(n);
    const double delta_c = 2.0 * LossSpec::deriv1_bound * bounds.b_value * std::sqrt(pd) / nd;
    const double radius_term =
        4.0 * std::sqrt(pd) +
        (2.0 * std::sqrt(std::log(2.0 / delta)) + r2) / std::sqrt(static_cast<double>(m));
    const double delta_a = 2.0 * LossSpec::deriv1_bound * bounds.act_deriv1 * bounds.b_deriv1 *
                           bounds.b_value * pd / nd * radius_term;
    return {delta_a, delta_c};
}

NoiseCalibration calibrate_noise(const DPConfig& cfg, const ModelSpec& spec, Eigen::Index n) {
    cfg.validate();
    spec.validate();
    if (n < 1) throw input_error("calibrate_noise: n >= 1 required");
    const BoundConstants bounds = bound_constants(spec.basis, spec.activation);

    NoiseCalibration cal;
    cal.epsilon = cfg.epsilon;
    cal.delta = cfg.delta;
    cal.T = cfg.T;
    cal.n = n;

    const double nd = static_cast<double>(n);
    const double Td = static_cast<double>(cfg.T);
    cal.sigma_tilde2 =
        Td * (1.0 + std::log(2.0 * Td / cfg.delta) / cfg.epsilon) / (nd * nd * cfg.epsilon);

    const double pd = static_cast<double>(spec.p);
    const double radius_term =
        4.0 * std::sqrt(pd) +
        (2.0 * std::sqrt(std::log(2.0 / cfg.delta)) + cfg.r2) /
            std::sqrt(static_cast<double>(spec.m));
    const double lead = LossSpec::deriv1_bound * bounds.act_deriv1 * bounds.b_deriv1 * bounds.b_value;
    cal.c1 = 8.0 * lead * lead * pd * pd * radius_term * radius_term;
    cal.c2 = 8.0 * LossSpec::deriv1_bound * LossSpec::deriv1_bound * bounds.b_value *
             bounds.b_value * pd;
    cal.sigma1_2 = cal.c1 * cal.sigma_tilde2;
    cal.sigma2_2 = cal.c2 * cal.sigma_tilde2;

    const auto [da, dc] = sensitivities(bounds, spec.p, spec.m, n, cfg.r2, cfg.delta);
    cal.delta_a = da;
    cal.delta_c = dc;
    return cal;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, const Eigen::VectorXd& center,
                             double radius) {
    if (!(radius > 0)) throw input_error("project_ball: radius must be positive");
    if (v.size() != center.size()) throw input_error("project_ball: dimension mismatch");
    const double dist = (v - center).norm();
    if (dist <= radius) return v;
    return center + (radius / dist) * (v - center);
}

void project_ball_inplace(Eigen::MatrixXd& v, const Eigen::MatrixXd& center, double radius) {
    const double dist = (v - center).norm();
    if (dist > radius) v = center + (radius / dist) * (v - center);
}

TheoryConstants TheoryConstants::assemble(const BoundConstants& bounds, int p, int m,
                                          double c0_norm, double max_unit_c0_norm, double r_c) {
    if (!bounds.basis_second_deriv_valid)
        throw config_error("curvature constants require a C^2 basis (hat family excluded)");
    TheoryConstants tc;
    const double pd = static_cast<double>(p);
    const double md = static_cast<double>(m);
    const double grad_c_sq = pd * bounds.b_value * bounds.b_value;
    const double lead = bounds.act_deriv1 * bounds.b_value * bounds.b_deriv1;
    const double grad_a = lead * pd / std::sqrt(md) * (c0_norm + r_c);
    tc.grad_sup = std::sqrt(grad_c_sq + grad_a * grad_a);
    const double w_norm = std::sqrt(pd) * (bounds.act_deriv2 * bounds.b_deriv1 +
                                           bounds.act_deriv1 * bounds.act_deriv1 * bounds.b_deriv2);
    tc.hess_sup = 2.0 * lead * pd / std::sqrt(md) +
                  bounds.b_value * bounds.b_value * pd / std::sqrt(md) * w_norm *
                      (max_unit_c0_norm + r_c);
    tc.rho_hat = tc.grad_sup * tc.grad_sup + tc.hess_sup;
    tc.kappa_hat = std::sqrt(md) * tc.hess_sup;
    return tc;
}

TheoryConstants TheoryConstants::assemble_probabilistic(const BoundConstants& bounds, int p,
                                                        int m, double delta, double r_c) {
    const double pd = static_cast<double>(p);
    const double md = static_cast<double>(m);
    const double c0 = 4.0 * std::sqrt(pd * md) + 2.0 * std::sqrt(std::log(2.0 / delta));
    const double unit = 4.0 * std::sqrt(pd) + 2.0 * std::sqrt(std::log(2.0 * md / delta));
    return assemble(bounds, p, m, c0, unit, r_c);
}

DpStepResult dpgd_step(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                       double eta, const NoiseCalibration& calib, const ParamVector& center,
                       double r1, double r2, NormalStream& noise) {
    const BatchLoss bl = batch_loss(spec, params, data, true);
    if (!bl.grad.a.allFinite() || !bl.grad.c.allFinite())
        throw numeric_error("non-finite gradient in dpgd_step");

    DpStepResult out;
    out.params = params;

    const double sigma1 = std::sqrt(calib.sigma1_2);
    const double sigma2 = std::sqrt(calib.sigma2_2);
    Eigen::MatrixXd b1(params.a.rows(), params.a.cols());
    Eigen::MatrixXd b2(params.c.rows(), params.c.cols());
    noise.fill(b1);
    noise.fill(b2);
    b1 *= sigma1;
    b2 *= sigma2;
    out.noise_a_norm = b1.norm();
    out.noise_c_norm = b2.norm();

    out.params.a -= eta * (bl.grad.a + b1);
    out.params.c -= eta * (bl.grad.c + b2);
    project_ball_inplace(out.params.a, center.a, r1);
    project_ball_inplace(out.params.c, center.c, r2);
    if (!out.params.a.allFinite() || !out.params.c.allFinite())
        throw numeric_error("non-finite iterate in dpgd_step");
    return out;
}

DpResult train_dpgd(const ModelSpec& spec, const SampleSet& train, const SampleSet* test,
                    const DPConfig& cfg, bool noise_enabled) {
    spec.validate();
    cfg.validate();

    DpResult result;
    result.params = init_params(spec, cfg.seed_init);
    const ParamVector theta0 = result.params;
    result.calibration = calibrate_noise(cfg, spec, train.size());

    NoiseCalibration active = result.calibration;
    if (!noise_enabled) {
        active.sigma1_2 = 0.0;
        active.sigma2_2 = 0.0;
    }

    const double c0_bound = 4.0 * std::sqrt(static_cast<double>(spec.p) * spec.m) +
                            2.0 * std::sqrt(std::log(2.0 / cfg.delta));
    result.c0_event_held = theta0.c.norm() <= c0_bound;

    result.log.eta = cfg.eta;
    result.log.m = spec.m;
    result.log.p = spec.p;
    result.log.basis_value_bound = bound_constants(spec.basis, spec.activation).b_value;

    double cum_loss = 0.0;
    double test_loss_sum = 0.0;
    int test_loss_count = 0;

    auto record = [&](int k, const BatchLoss& bl, double noise_norm, double test_loss,
                      double test_acc) {
        TrajectoryRow row;
        row.iter = k;
        row.train_loss = bl.risk;
        row.train_acc = bl.accuracy;
        row.grad_norm = bl.has_grad ? std::sqrt(bl.grad.squared_norm()) : 0.0;
        row.drift_init = result.params.dist(theta0);
        row.max_c_drift = result.params.max_unit_c_dist(theta0);
        row.cum_loss = cum_loss;
        row.noise_norm = noise_norm;
        row.test_loss = test_loss;
        row.test_acc = test_acc;
        result.log.rows.push_back(row);
    };

    double pending_noise_norm = 0.0; // norm of the noise that produced the current iterate
    for (int k = 0; k <= cfg.T; ++k) {
        const bool last = k == cfg.T;
        result.max_a_block_drift =
            std::max(result.max_a_block_drift, (result.params.a - theta0.a).norm());
        result.max_c_block_drift =
            std::max(result.max_c_block_drift, (result.params.c - theta0.c).norm());
        BatchLoss bl;
        try {
            bl = batch_loss(spec, result.params, train, true);
        } catch (const std::exception& e) {
            result.status = TrainStatus::Diverged;
            result.error = e.what();
            return result;
        }
        cum_loss += bl.risk;

        double test_loss = std::numeric_limits<double>::quiet_NaN();
        double test_acc = std::numeric_limits<double>::quiet_NaN();
        if (test) {
            const BatchLoss tl = batch_loss(spec, result.params, *test, false);
            test_loss = tl.risk;
            test_acc = tl.accuracy;
            if (k >= 1) { // Theorem-style trajectory average over k = 1..T
                test_loss_sum += tl.risk;
                ++test_loss_count;
            }
        }

        if (!std::isfinite(bl.risk) || bl.risk > 1e12) {
            record(k, bl, pending_noise_norm, test_loss, test_acc);
            result.status = TrainStatus::Diverged;
            result.error = "dp training diverged at iteration " + std::to_string(k);
            return result;
        }
        if (last || k % cfg.record_every == 0)
            record(k, bl, k == 0 ? std::numeric_limits<double>::quiet_NaN() : pending_noise_norm,
                   test_loss, test_acc);

        if (!last) {
            NormalStream noise = iteration_stream(cfg.seed_noise, static_cast<std::uint64_t>(k));
            try {
                DpStepResult step = dpgd_step(spec, result.params, train, cfg.eta, active, theta0,
                                              cfg.r1, cfg.r2, noise);
                result.params = std::move(step.params);
                pending_noise_norm = std::sqrt(step.noise_a_norm * step.noise_a_norm +
                                               step.noise_c_norm * step.noise_c_norm);
            } catch (const numeric_error& e) {
                result.status = TrainStatus::Diverged;
                result.error = e.what();
                return result;
            }
        }
    }
    if (test_loss_count > 0)
        result.traj_avg_test_loss = test_loss_sum / static_cast<double>(test_loss_count);
    return result;
}

} // namespace kan
