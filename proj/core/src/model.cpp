#include "kan/model.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "kan/rng.hpp"

namespace kan {

namespace {
constexpr std::uint64_t kInitStream = 0x494E4954ULL; // "INIT"
} // namespace

ModelSpec ModelSpec::make(int d, int m, int p, BasisFamily family, ActivationFamily act) {
    ModelSpec spec;
    spec.d = d;
    spec.m = m;
    spec.p = p;
    spec.basis = BasisSpec::make(family, p);
    spec.activation.family = act;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (d < 1) throw config_error("model requires d >= 1");
    if (m < 1) throw config_error("model requires m >= 1");
    basis.validate();
    if (basis.p != p) throw config_error("basis p does not match model p");
}

ParamVector ParamVector::zero(const ModelSpec& spec) {
    ParamVector pv;
    pv.a = Eigen::MatrixXd::Zero(spec.m, static_cast<Eigen::Index>(spec.d) * spec.p);
    pv.c = Eigen::MatrixXd::Zero(spec.m, spec.p);
    return pv;
}

Eigen::VectorXd ParamVector::flatten() const {
    Eigen::VectorXd theta(a.size() + c.size());
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < a.rows(); ++j)
        for (Eigen::Index q = 0; q < a.cols(); ++q) theta[pos++] = a(j, q);
    for (Eigen::Index j = 0; j < c.rows(); ++j)
        for (Eigen::Index k = 0; k < c.cols(); ++k) theta[pos++] = c(j, k);
    return theta;
}

ParamVector ParamVector::unflatten(const ModelSpec& spec, const Eigen::VectorXd& theta) {
    if (theta.size() != spec.param_count())
        throw input_error("unflatten: parameter vector has wrong length");
    ParamVector pv = ParamVector::zero(spec);
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < pv.a.rows(); ++j)
        for (Eigen::Index q = 0; q < pv.a.cols(); ++q) pv.a(j, q) = theta[pos++];
    for (Eigen::Index j = 0; j < pv.c.rows(); ++j)
        for (Eigen::Index k = 0; k < pv.c.cols(); ++k) pv.c(j, k) = theta[pos++];
    return pv;
}

double ParamVector::norm() const { return std::sqrt(squared_norm()); }

double ParamVector::max_unit_c_dist(const ParamVector& other) const {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < c.rows(); ++j)
        worst = std::max(worst, (c.row(j) - other.c.row(j)).norm());
    return worst;
}

double ParamVector::dist(const ParamVector& other) const {
    return std::sqrt((a - other.a).squaredNorm() + (c - other.c).squaredNorm());
}

ParamVector& ParamVector::axpy(double alpha, const ParamVector& g) {
    a += alpha * g.a;
    c += alpha * g.c;
    return *this;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector pv = ParamVector::zero(spec);
    NormalStream rng(derive_stream(seed, kInitStream));
    rng.fill(pv.a);
    rng.fill(pv.c);
    return pv;
}

namespace {

/// First-layer basis expansion h(x) of one input, written densely into hx.
void input_expansion(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                     Eigen::VectorXd& hx) {
    hx.setZero(static_cast<Eigen::Index>(spec.d) * spec.p);
    for (int i = 0; i < spec.d; ++i) {
        const BasisJet jet = basis_jet_local(spec.basis, x[i]);
        for (int j = 0; j < jet.count; ++j)
            hx[static_cast<Eigen::Index>(i) * spec.p + jet.first + j] = jet.value[j];
    }
}

void check_input(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != spec.d) throw input_error("input dimension mismatch");
}

} // namespace

double forward(const ModelSpec& spec, const ParamVector& params,
               const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_input(spec, x);
    Eigen::VectorXd hx;
    input_expansion(spec, x, hx);
    const Eigen::VectorXd pre = (params.a * hx) / std::sqrt(static_cast<double>(spec.d));
    double sum = 0.0;
    for (int j = 0; j < spec.m; ++j) {
        const double u = eval_activation_jet(spec.activation, pre[j]).value;
        const BasisJet jet = basis_jet_local(spec.basis, u);
        for (int q = 0; q < jet.count; ++q) sum += params.c(j, jet.first + q) * jet.value[q];
    }
    return sum / std::sqrt(static_cast<double>(spec.m));
}

ParamVector grad_f(const ModelSpec& spec, const ParamVector& params,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_input(spec, x);
    Eigen::VectorXd hx;
    input_expansion(spec, x, hx);
    const double inv_sm = 1.0 / std::sqrt(static_cast<double>(spec.m));
    const double inv_smd = inv_sm / std::sqrt(static_cast<double>(spec.d));
    const Eigen::VectorXd pre = (params.a * hx) / std::sqrt(static_cast<double>(spec.d));

    ParamVector grad = ParamVector::zero(spec);
    for (int j = 0; j < spec.m; ++j) {
        const ActivationJet act = eval_activation_jet(spec.activation, pre[j]);
        const BasisJet jet = basis_jet_local(spec.basis, act.value);
        double c_dot_hprime = 0.0;
        for (int q = 0; q < jet.count; ++q) {
            grad.c(j, jet.first + q) = inv_sm * jet.value[q];
            c_dot_hprime += params.c(j, jet.first + q) * jet.d1[q];
        }
        grad.a.row(j) = (inv_smd * c_dot_hprime * act.d1) * hx.transpose();
    }
    return grad;
}

HessianBlocks hessian_f(const ModelSpec& spec, const ParamVector& params,
                        const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_input(spec, x);
    if (spec.param_count() > 5000)
        throw input_error("hessian_f is verification-scale only: m*p*(d+1) must be <= 5000");

    Eigen::VectorXd hx;
    input_expansion(spec, x, hx);
    const double sqrt_m = std::sqrt(static_cast<double>(spec.m));
    const double dd = static_cast<double>(spec.d);
    const Eigen::VectorXd pre = (params.a * hx) / std::sqrt(dd);

    HessianBlocks blocks;
    blocks.aa.reserve(static_cast<std::size_t>(spec.m));
    blocks.ac.reserve(static_cast<std::size_t>(spec.m));
    const Eigen::MatrixXd outer = hx * hx.transpose();
    for (int j = 0; j < spec.m; ++j) {
        const ActivationJet act = eval_activation_jet(spec.activation, pre[j]);
        const BasisJet jet = basis_jet_local(spec.basis, act.value);
        // w_j = sigma''(pre) h'(u) + sigma'(pre)^2 h''(u), contracted with c_j.
        double c_dot_w = 0.0;
        Eigen::VectorXd hprime = Eigen::VectorXd::Zero(spec.p);
        for (int q = 0; q < jet.count; ++q) {
            c_dot_w += params.c(j, jet.first + q) * (act.d2 * jet.d1[q] + act.d1 * act.d1 * jet.d2[q]);
            hprime[jet.first + q] = jet.d1[q];
        }
        blocks.aa.push_back((c_dot_w / (dd * sqrt_m)) * outer);
        blocks.ac.push_back((act.d1 / (sqrt_m * std::sqrt(dd))) * (hx * hprime.transpose()));
    }
    return blocks;
}

Eigen::MatrixXd assemble_hessian(const ModelSpec& spec, const HessianBlocks& blocks) {
    const Eigen::Index P = spec.param_count();
    const Eigen::Index dp = static_cast<Eigen::Index>(spec.d) * spec.p;
    const Eigen::Index a_total = spec.a_count();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(P, P);
    for (int j = 0; j < spec.m; ++j) {
        const Eigen::Index ra = static_cast<Eigen::Index>(j) * dp;
        const Eigen::Index rc = a_total + static_cast<Eigen::Index>(j) * spec.p;
        H.block(ra, ra, dp, dp) = blocks.aa[static_cast<std::size_t>(j)];
        H.block(ra, rc, dp, spec.p) = blocks.ac[static_cast<std::size_t>(j)];
        H.block(rc, ra, spec.p, dp) = blocks.ac[static_cast<std::size_t>(j)].transpose();
    }
    return H;
}

double hessian_operator_norm(const ModelSpec& spec, const HessianBlocks& blocks) {
    // Per-unit blocks [[aa_j, ac_j], [ac_j^T, 0]]; the overall norm is the
    // max over units.
    const Eigen::Index dp = static_cast<Eigen::Index>(spec.d) * spec.p;
    const Eigen::Index b = dp + spec.p;
    double worst = 0.0;
    Eigen::MatrixXd unit(b, b);
    for (int j = 0; j < spec.m; ++j) {
        unit.setZero();
        unit.block(0, 0, dp, dp) = blocks.aa[static_cast<std::size_t>(j)];
        unit.block(0, dp, dp, spec.p) = blocks.ac[static_cast<std::size_t>(j)];
        unit.block(dp, 0, spec.p, dp) = blocks.ac[static_cast<std::size_t>(j)].transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unit, Eigen::EigenvaluesOnly);
        worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    return worst;
}

void batch_forward_and_grad(const ModelSpec& spec, const ParamVector& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            Eigen::VectorXd& f_out,
                            const std::function<double(Eigen::Index, double)>& weight,
                            ParamVector* grad, Eigen::Index chunk) {
    spec.validate();
    if (X.cols() != spec.d) throw input_error("batch input dimension mismatch");
    const Eigen::Index n = X.rows();
    const Eigen::Index dp = static_cast<Eigen::Index>(spec.d) * spec.p;
    const double inv_sd = 1.0 / std::sqrt(static_cast<double>(spec.d));
    const double inv_sm = 1.0 / std::sqrt(static_cast<double>(spec.m));
    const double inv_smd = inv_sm * inv_sd;

    f_out.resize(n);
    if (grad) *grad = ParamVector::zero(spec);
    if (chunk < 1) chunk = 1;

    Eigen::MatrixXd H(dp, chunk);       // basis expansion, one column per sample
    Eigen::MatrixXd Pre(spec.m, chunk); // first-layer pre-activations
    Eigen::MatrixXd W(spec.m, chunk);   // per-(unit,sample) a-gradient weights
    // Cached second-layer jets per (unit, sample): 4 basis values + offset.
    std::vector<double> jet_vals;
    std::vector<int> jet_first;
    if (grad) {
        jet_vals.resize(static_cast<std::size_t>(spec.m) * chunk * 4);
        jet_first.resize(static_cast<std::size_t>(spec.m) * chunk);
    }

    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index c = std::min(chunk, n - start);
        H.setZero();
        for (Eigen::Index s = 0; s < c; ++s) {
            for (int i = 0; i < spec.d; ++i) {
                const BasisJet jet = basis_jet_local(spec.basis, X(start + s, i));
                for (int q = 0; q < jet.count; ++q)
                    H(static_cast<Eigen::Index>(i) * spec.p + jet.first + q, s) = jet.value[q];
            }
        }
        Pre.leftCols(c).noalias() = inv_sd * (params.a * H.leftCols(c));

        for (Eigen::Index s = 0; s < c; ++s) {
            double f = 0.0;
            for (int j = 0; j < spec.m; ++j) {
                const ActivationJet act = eval_activation_jet(spec.activation, Pre(j, s));
                const BasisJet jet = basis_jet_local(spec.basis, act.value);
                double dot_v = 0.0;
                double dot_d1 = 0.0;
                for (int q = 0; q < jet.count; ++q) {
                    dot_v += params.c(j, jet.first + q) * jet.value[q];
                    dot_d1 += params.c(j, jet.first + q) * jet.d1[q];
                }
                f += dot_v;
                if (grad) {
                    W(j, s) = dot_d1 * act.d1;
                    const std::size_t base = (static_cast<std::size_t>(j) * chunk + s) * 4;
                    for (int q = 0; q < 4; ++q)
                        jet_vals[base + q] = q < jet.count ? jet.value[q] : 0.0;
                    jet_first[static_cast<std::size_t>(j) * chunk + s] = jet.first;
                }
            }
            f_out[start + s] = f * inv_sm;
        }

        if (grad) {
            Eigen::VectorXd w(c);
            for (Eigen::Index s = 0; s < c; ++s) w[s] = weight(start + s, f_out[start + s]);
            for (int j = 0; j < spec.m; ++j) {
                for (Eigen::Index s = 0; s < c; ++s) {
                    const double wc = w[s] * inv_sm;
                    const std::size_t base = (static_cast<std::size_t>(j) * chunk + s) * 4;
                    const int first = jet_first[static_cast<std::size_t>(j) * chunk + s];
                    const int count = std::min(4, spec.p - first);
                    for (int q = 0; q < count; ++q)
                        grad->c(j, first + q) += wc * jet_vals[base + q];
                    W(j, s) *= w[s] * inv_smd;
                }
            }
            grad->a.noalias() += W.leftCols(c) * H.leftCols(c).transpose();
        }
    }
}

Eigen::VectorXd batch_forward(const ModelSpec& spec, const ParamVector& params,
                              const Eigen::Ref<const Eigen::MatrixXd>& X) {
    Eigen::VectorXd f;
    batch_forward_and_grad(spec, params, X, f, nullptr, nullptr);
    return f;
}

std::string params_to_json(const ModelSpec& spec, const ParamVector& params) {
    nlohmann::json doc;
    doc["d"] = spec.d;
    doc["m"] = spec.m;
    doc["p"] = spec.p;
    doc["basis"] = to_string(spec.basis.family);
    doc["activation"] = to_string(spec.activation.family);
    const Eigen::VectorXd theta = params.flatten();
    doc["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
    return doc.dump();
}

std::pair<ModelSpec, ParamVector> params_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("bad parameter JSON: ") + e.what());
    }
    ModelSpec spec = ModelSpec::make(doc.at("d").get<int>(), doc.at("m").get<int>(),
                                     doc.at("p").get<int>(),
                                     basis_family_from_string(doc.at("basis").get<std::string>()),
                                     activation_family_from_string(doc.at("activation").get<std::string>()));
    const auto values = doc.at("theta").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != spec.param_count())
        throw format_error("parameter JSON: theta length does not match header");
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                              static_cast<Eigen::Index>(values.size()));
    return {spec, ParamVector::unflatten(spec, theta)};
}

void save_params_json(const std::string& path, const ModelSpec& spec, const ParamVector& params) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    out << params_to_json(spec, params);
}

std::pair<ModelSpec, ParamVector> load_params_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return params_from_json(text);
}

} // namespace kan
