#include "kan/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kan {

const char* to_string(BasisFamily f) {
    return f == BasisFamily::Hat ? "hat" : "cubic_bspline";
}

const char* to_string(ActivationFamily f) {
    return f == ActivationFamily::Tanh ? "tanh" : "sigmoid";
}

BasisFamily basis_family_from_string(const std::string& s) {
    if (s == "hat") return BasisFamily::Hat;
    if (s == "cubic_bspline") return BasisFamily::CubicBspline;
    throw config_error("unknown basis family: " + s);
}

ActivationFamily activation_family_from_string(const std::string& s) {
    if (s == "tanh") return ActivationFamily::Tanh;
    if (s == "sigmoid") return ActivationFamily::Sigmoid;
    throw config_error("unknown activation family: " + s);
}

BasisSpec BasisSpec::hat(int p, double lo, double hi) {
    BasisSpec spec;
    spec.family = BasisFamily::Hat;
    spec.p = p;
    spec.lo = lo;
    spec.hi = hi;
    spec.validate();
    spec.knots.resize(static_cast<std::size_t>(p));
    const double dv = (hi - lo) / static_cast<double>(p - 1);
    for (int k = 0; k < p; ++k) spec.knots[static_cast<std::size_t>(k)] = lo + dv * k;
    spec.knots.back() = hi;
    return spec;
}

BasisSpec BasisSpec::cubic_bspline(int p, double lo, double hi) {
    BasisSpec spec;
    spec.family = BasisFamily::CubicBspline;
    spec.p = p;
    spec.lo = lo;
    spec.hi = hi;
    spec.validate();
    // Clamped knot vector: p+4 knots, endpoint multiplicity 4, p-3 intervals.
    spec.knots.resize(static_cast<std::size_t>(p + 4));
    const double dv = (hi - lo) / static_cast<double>(p - 3);
    for (int i = 0; i < p + 4; ++i) {
        double t;
        if (i <= 3)
            t = lo;
        else if (i >= p)
            t = hi;
        else
            t = lo + dv * (i - 3);
        spec.knots[static_cast<std::size_t>(i)] = t;
    }
    return spec;
}

BasisSpec BasisSpec::make(BasisFamily family, int p, double lo, double hi) {
    return family == BasisFamily::Hat ? hat(p, lo, hi) : cubic_bspline(p, lo, hi);
}

void BasisSpec::validate() const {
    if (!(lo < hi)) throw config_error("basis domain requires lo < hi");
    const int min_p = family == BasisFamily::Hat ? 2 : 4;
    if (p < min_p)
        throw config_error("basis family " + std::string(to_string(family)) +
                           " requires p >= " + std::to_string(min_p) + ", got " +
                           std::to_string(p));
}

double BasisSpec::clamp(double v) const {
    return v < lo ? lo : (v > hi ? hi : v);
}

namespace {

inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

BasisJet hat_jet(const BasisSpec& spec, double v) {
    BasisJet jet;
    const double dv = (spec.hi - spec.lo) / static_cast<double>(spec.p - 1);
    int k0 = static_cast<int>((v - spec.lo) / dv);
    k0 = std::clamp(k0, 0, spec.p - 2);
    const double tl = spec.knots[static_cast<std::size_t>(k0)];
    jet.first = k0;
    jet.count = 2;
    // knot rounding can push the weight an ulp outside [0,1]
    const double w = std::clamp((v - tl) / dv, 0.0, 1.0);
    jet.value[0] = 1.0 - w;
    jet.value[1] = w;
    jet.d1[0] = -1.0 / dv;
    jet.d1[1] = 1.0 / dv;
    // Second derivatives are zero away from knots; defined as zero everywhere.
    return jet;
}

BasisJet cubic_jet(const BasisSpec& spec, double v) {
    const double* t = spec.knots.data();
    const int p = spec.p;

    // Span mu with t[mu] <= v < t[mu+1]; valid spans are 3..p-1, v==hi maps
    // to the last one.
    int mu = 3;
    {
        int low = 3, high = p - 1;
        if (v >= t[p - 1]) {
            mu = p - 1;
        } else {
            while (low < high) {
                const int mid = (low + high + 1) / 2;
                if (t[mid] <= v)
                    low = mid;
                else
                    high = mid - 1;
            }
            mu = low;
        }
    }

    // Nonzero basis values of degrees 1..3 on span mu, built bottom-up.
    // Degree q functions nonzero at v are indices mu-q..mu.
    double n1[2]; // B_{mu-1,1}, B_{mu,1}
    double n2[3]; // B_{mu-2,2}..B_{mu,2}
    double n3[4]; // B_{mu-3,3}..B_{mu,3}

    const double span = t[mu + 1] - t[mu];
    n1[1] = (v - t[mu]) / span;
    n1[0] = (t[mu + 1] - v) / span;

    for (int j = 0; j < 3; ++j) {
        const int i = mu - 2 + j;
        const double b_i = (j >= 1) ? n1[j - 1] : 0.0;   // B_{i,1}
        const double b_i1 = (j <= 1) ? n1[j] : 0.0;      // B_{i+1,1}
        n2[j] = safe_div(v - t[i], t[i + 2] - t[i]) * b_i +
                safe_div(t[i + 3] - v, t[i + 3] - t[i + 1]) * b_i1;
    }
    for (int j = 0; j < 4; ++j) {
        const int i = mu - 3 + j;
        const double b_i = (j >= 1) ? n2[j - 1] : 0.0;   // B_{i,2}
        const double b_i1 = (j <= 2) ? n2[j] : 0.0;      // B_{i+1,2}
        n3[j] = safe_div(v - t[i], t[i + 3] - t[i]) * b_i +
                safe_div(t[i + 4] - v, t[i + 4] - t[i + 1]) * b_i1;
    }

    // Derivatives of degree-2 functions: B'_{i,2} = 2(B_{i,1}/(t_{i+2}-t_i) - B_{i+1,1}/(t_{i+3}-t_{i+1})).
    double d1_deg2[3];
    for (int j = 0; j < 3; ++j) {
        const int i = mu - 2 + j;
        const double b_i = (j >= 1) ? n1[j - 1] : 0.0;
        const double b_i1 = (j <= 1) ? n1[j] : 0.0;
        d1_deg2[j] = 2.0 * (safe_div(b_i, t[i + 2] - t[i]) - safe_div(b_i1, t[i + 3] - t[i + 1]));
    }

    BasisJet jet;
    jet.first = mu - 3;
    jet.count = 4;
    for (int j = 0; j < 4; ++j) {
        const int i = mu - 3 + j;
        jet.value[j] = n3[j];
        const double b2_i = (j >= 1) ? n2[j - 1] : 0.0;
        const double b2_i1 = (j <= 2) ? n2[j] : 0.0;
        jet.d1[j] = 3.0 * (safe_div(b2_i, t[i + 3] - t[i]) - safe_div(b2_i1, t[i + 4] - t[i + 1]));
        const double db2_i = (j >= 1) ? d1_deg2[j - 1] : 0.0;
        const double db2_i1 = (j <= 2) ? d1_deg2[j] : 0.0;
        jet.d2[j] = 3.0 * (safe_div(db2_i, t[i + 3] - t[i]) - safe_div(db2_i1, t[i + 4] - t[i + 1]));
    }
    return jet;
}

} // namespace

BasisJet basis_jet_local(const BasisSpec& spec, double v) {
    const double vc = spec.clamp(v);
    return spec.family == BasisFamily::Hat ? hat_jet(spec, vc) : cubic_jet(spec, vc);
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, double v) {
    spec.validate();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.p);
    const BasisJet jet = basis_jet_local(spec, v);
    for (int j = 0; j < jet.count; ++j) out[jet.first + j] = jet.value[j];
    return out;
}

void eval_basis_jet(const BasisSpec& spec, double v, Eigen::VectorXd& value,
                    Eigen::VectorXd& d1, Eigen::VectorXd& d2) {
    spec.validate();
    value = Eigen::VectorXd::Zero(spec.p);
    d1 = Eigen::VectorXd::Zero(spec.p);
    d2 = Eigen::VectorXd::Zero(spec.p);
    const BasisJet jet = basis_jet_local(spec, v);
    for (int j = 0; j < jet.count; ++j) {
        value[jet.first + j] = jet.value[j];
        d1[jet.first + j] = jet.d1[j];
        d2[jet.first + j] = jet.d2[j];
    }
}

ActivationJet eval_activation_jet(const ActivationSpec& spec, double u) {
    ActivationJet jet;
    if (spec.family == ActivationFamily::Tanh) {
        const double th = std::tanh(u);
        jet.value = th;
        jet.d1 = 1.0 - th * th;
        jet.d2 = -2.0 * th * jet.d1;
    } else {
        const double s = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u))
                                  : std::exp(u) / (1.0 + std::exp(u));
        jet.value = s;
        jet.d1 = s * (1.0 - s);
        jet.d2 = jet.d1 * (1.0 - 2.0 * s);
    }
    return jet;
}

BoundConstants bound_constants(const BasisSpec& basis, const ActivationSpec& act,
                               int grid_points) {
    basis.validate();
    if (grid_points < 10000) grid_points = 10000;

    BoundConstants bc;
    bc.basis_second_deriv_valid = basis.family != BasisFamily::Hat;

    Eigen::VectorXd val, d1, d2;
    auto scan = [&](double v) {
        eval_basis_jet(basis, v, val, d1, d2);
        bc.b_value = std::max(bc.b_value, val.cwiseAbs().maxCoeff());
        bc.b_deriv1 = std::max(bc.b_deriv1, d1.cwiseAbs().maxCoeff());
        if (bc.basis_second_deriv_valid)
            bc.b_deriv2 = std::max(bc.b_deriv2, d2.cwiseAbs().maxCoeff());
    };
    const double step = (basis.hi - basis.lo) / static_cast<double>(grid_points - 1);
    for (int i = 0; i < grid_points; ++i) scan(basis.lo + step * i);
    for (double t : basis.knots) scan(basis.clamp(t));
    scan(basis.hi);

    // Piecewise-polynomial extrema sit at knots/endpoints, which the grid
    // contains; the inflation covers grid quantization of interior extrema.
    const double inflate = 1.0 + 1e-9;
    bc.b_value *= inflate;
    bc.b_deriv1 *= inflate;
    bc.b_deriv2 *= inflate;

    // Activation: wide grid plus the analytic suprema.
    double a0 = 0, a1 = 0, a2 = 0;
    for (int i = 0; i <= 20000; ++i) {
        const double u = -30.0 + 60.0 * i / 20000.0;
        const ActivationJet jet = eval_activation_jet(act, u);
        a0 = std::max(a0, std::abs(jet.value));
        a1 = std::max(a1, std::abs(jet.d1));
        a2 = std::max(a2, std::abs(jet.d2));
    }
    if (act.family == ActivationFamily::Tanh) {
        bc.act_value = std::max(a0, 1.0);
        bc.act_deriv1 = std::max(a1, 1.0);
        bc.act_deriv2 = std::max(a2, 4.0 / (3.0 * std::sqrt(3.0)));
    } else {
        bc.act_value = std::max(a0, 1.0);
        bc.act_deriv1 = std::max(a1, 0.25);
        bc.act_deriv2 = std::max(a2, 1.0 / (6.0 * std::sqrt(3.0)));
    }
    return bc;
}

} // namespace kan
