#pragma once

#include <vector>

#include <Eigen/Core>

#include "kan/errors.hpp"

namespace kan {

enum class BasisFamily { Hat, CubicBspline };
enum class ActivationFamily { Tanh, Sigmoid };

const char* to_string(BasisFamily f);
const char* to_string(ActivationFamily f);
BasisFamily basis_family_from_string(const std::string& s);
ActivationFamily activation_family_from_string(const std::string& s);

/// Univariate basis family {b_1..b_p} on a closed interval [lo, hi].
///
/// Hat: p triangular functions centered at uniform knots, spacing
/// (hi-lo)/(p-1). CubicBspline: p cubic B-splines on an open/clamped uniform
/// knot vector (endpoint multiplicity 4), so constants are reproduced on
/// [lo, hi]. Inputs outside the interval are clamped to the nearest endpoint.
struct BasisSpec {
    BasisFamily family = BasisFamily::CubicBspline;
    int p = 8;
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> knots; // derived; strictly increasing for Hat, clamped for cubic

    static BasisSpec hat(int p, double lo = -1.0, double hi = 1.0);
    static BasisSpec cubic_bspline(int p, double lo = -1.0, double hi = 1.0);
    static BasisSpec make(BasisFamily family, int p, double lo = -1.0, double hi = 1.0);

    double clamp(double v) const;
    void validate() const; // throws config_error
};

/// Bounded activation applied after the first KAN layer.
struct ActivationSpec {
    ActivationFamily family = ActivationFamily::Tanh;
};

/// Values and first/second derivatives of the basis functions that are
/// nonzero at one point: at most 2 (hat) or 4 (cubic) of them.
struct BasisJet {
    int first = 0; // index of the first active basis function
    int count = 0;
    double value[4] = {0, 0, 0, 0};
    double d1[4] = {0, 0, 0, 0};
    double d2[4] = {0, 0, 0, 0};

    template <typename F>
    void for_each(F&& f) const {
        for (int j = 0; j < count; ++j) f(first + j, value[j], d1[j], d2[j]);
    }
};

/// Local jet at v (after clamping). Allocation-free; this is the hot path.
BasisJet basis_jet_local(const BasisSpec& spec, double v);

/// Dense evaluation (b_1(v), ..., b_p(v)).
Eigen::VectorXd eval_basis(const BasisSpec& spec, double v);

/// Dense values + first and second derivatives. For the hat family the
/// second-derivative vector is all-zeros (piecewise linear basis).
void eval_basis_jet(const BasisSpec& spec, double v, Eigen::VectorXd& value,
                    Eigen::VectorXd& d1, Eigen::VectorXd& d2);

struct ActivationJet {
    double value = 0;
    double d1 = 0;
    double d2 = 0;
};

ActivationJet eval_activation_jet(const ActivationSpec& spec, double u);

/// Uniform bounds of Assumption-style boundedness: |b_k| <= b_value,
/// |b_k'| <= b_deriv1, |b_k''| <= b_deriv2 on the basis domain, and the
/// activation bounds over the real line.
///
/// For the hat family the basis is C^0, so no uniform second-derivative
/// bound exists; basis_second_deriv_valid is false and b_deriv2 is the a.e.
/// value 0.
struct BoundConstants {
    double b_value = 0;
    double b_deriv1 = 0;
    double b_deriv2 = 0;
    double act_value = 0;
    double act_deriv1 = 0;
    double act_deriv2 = 0;
    bool basis_second_deriv_valid = true;
};

/// Bounds from a dense grid (>= grid_points samples including endpoints and
/// knots), lightly inflated so that they dominate any fresh re-sampling; the
/// activation bounds take the known analytic suprema.
BoundConstants bound_constants(const BasisSpec& basis, const ActivationSpec& act,
                               int grid_points = 20001);

} // namespace kan
