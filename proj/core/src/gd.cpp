#include "kan/gd.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace kan {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool finite_params(const ParamVector& pv) {
    return pv.a.allFinite() && pv.c.allFinite();
}

} // namespace

void GDConfig::validate() const {
    if (!(eta > 0)) throw config_error("gd requires eta > 0");
    if (T < 0) throw config_error("gd requires T >= 0");
    if (record_every < 1) throw config_error("gd requires record_every >= 1");
}

void TrajectoryLog::write_csv(std::ostream& out) const {
    out << "iter,train_loss,test_loss,train_acc,test_acc,drift_init,max_c_drift,"
           "grad_norm,cum_loss,noise_norm\n";
    for (const TrajectoryRow& r : rows) {
        out << r.iter << ',' << format_double(r.train_loss) << ','
            << (std::isnan(r.test_loss) ? "" : format_double(r.test_loss)) << ','
            << format_double(r.train_acc) << ','
            << (std::isnan(r.test_acc) ? "" : format_double(r.test_acc)) << ','
            << format_double(r.drift_init) << ',' << format_double(r.max_c_drift) << ','
            << format_double(r.grad_norm) << ',' << format_double(r.cum_loss) << ','
            << (std::isnan(r.noise_norm) ? "" : format_double(r.noise_norm)) << "\n";
    }
}

void TrajectoryLog::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    write_csv(out);
}

ParamVector gd_step(const ModelSpec& spec, const ParamVector& params, const SampleSet& data,
                    double eta) {
    if (!(eta > 0)) throw config_error("gd_step requires eta > 0");
    const BatchLoss bl = batch_loss(spec, params, data, true);
    if (!finite_params(bl.grad)) throw numeric_error("non-finite gradient in gd_step");
    ParamVector next = params;
    next.axpy(-eta, bl.grad);
    return next;
}

GDResult train_gd(const ModelSpec& spec, const SampleSet& train, const SampleSet* test,
                  const GDConfig& cfg, const ParamVector* ref_point) {
    spec.validate();
    cfg.validate();

    GDResult result;
    result.params = init_params(spec, cfg.seed);
    const ParamVector theta0 = result.params;

    result.log.eta = cfg.eta;
    result.log.m = spec.m;
    result.log.p = spec.p;
    result.log.basis_value_bound =
        bound_constants(spec.basis, spec.activation).b_value;

    double cum_loss = 0.0;
    auto record = [&](int k, const BatchLoss& bl) {
        TrajectoryRow row;
        row.iter = k;
        row.train_loss = bl.risk;
        row.train_acc = bl.accuracy;
        row.grad_norm = bl.has_grad ? std::sqrt(bl.grad.squared_norm()) : 0.0;
        row.drift_init = result.params.dist(theta0);
        row.max_c_drift = result.params.max_unit_c_dist(theta0);
        row.cum_loss = cum_loss;
        if (test) {
            const BatchLoss tl = batch_loss(spec, result.params, *test, false);
            row.test_loss = tl.risk;
            row.test_acc = tl.accuracy;
        }
        if (ref_point) row.dist_to_ref = result.params.dist(*ref_point);
        result.log.rows.push_back(row);
    };

    for (int k = 0; k <= cfg.T; ++k) {
        const bool last = k == cfg.T;
        const BatchLoss bl = batch_loss(spec, result.params, train, true);
        cum_loss += bl.risk;

        if (!std::isfinite(bl.risk) || bl.risk > 1e12 || !finite_params(bl.grad)) {
            record(k, bl);
            result.status = TrainStatus::Diverged;
            result.error = "training diverged at iteration " + std::to_string(k) +
                           " (loss=" + std::to_string(bl.risk) + ")";
            return result;
        }
        if (last || k % cfg.record_every == 0) record(k, bl);
        if (!last) result.params.axpy(-cfg.eta, bl.grad);
    }
    return result;
}

DiagnosticsReport diagnose_trajectory(const TrajectoryLog& log, const ReferencePoint* ref) {
    if (log.rows.empty()) throw input_error("diagnose_trajectory: empty log");

    DiagnosticsReport report;
    const double drift_coeff =
        log.eta * log.basis_value_bound * std::sqrt(static_cast<double>(log.p)) /
        std::sqrt(static_cast<double>(log.m));

    double prev_loss = log.rows.front().train_loss;
    double sum_loss = 0.0;
    int counted = 0;
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
        const TrajectoryRow& r = log.rows[i];
        if (i > 0) {
            if (r.train_loss > prev_loss) ++report.monotonicity_violations;
            prev_loss = r.train_loss;
        }
        report.max_drift = std::max(report.max_drift, r.drift_init);
        // Lemma-style bound: max_j ||c_j(k)-c_j(0)|| <= coeff * sum_{t<k} L_S(t).
        const double bound = drift_coeff * (r.cum_loss - r.train_loss);
        report.max_c_drift_residual = std::max(report.max_c_drift_residual,
                                               r.max_c_drift - bound);
        if (r.iter > 0) {
            sum_loss += r.train_loss;
            ++counted;
        }
    }

    if (ref) {
        report.ref_provided = true;
        const double lam = ref->lambda;
        for (const TrajectoryRow& r : log.rows) {
            if (!std::isnan(r.dist_to_ref) && r.dist_to_ref > std::sqrt(2.0) * lam + 1e-9)
                report.stayed_within_sqrt2_lambda = false;
            if (r.drift_init > 3.0 * lam + 1e-9) report.stayed_within_3_lambda = false;
        }
        if (counted > 0 && std::isfinite(ref->complexity) && ref->complexity > 0) {
            const double avg = sum_loss / static_cast<double>(counted);
            const double eta_T = log.eta * static_cast<double>(log.rows.back().iter);
            if (eta_T > 0) report.bound_usage_ratio = avg / (ref->complexity / eta_T);
        }
    }
    return report;
}

} // namespace kan
