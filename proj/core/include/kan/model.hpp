#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kan/basis.hpp"
#include "kan/errors.hpp"

namespace kan {

/// Two-layer KAN architecture: d inputs, m hidden units, p basis functions
/// per edge. The same basis family is used on both layers; both basis
/// domains are [-1, 1] (inputs satisfy ||x||_2 <= 1 and the activation range
/// is inside [-1, 1]).
struct ModelSpec {
    int d = 10;
    int m = 32;
    int p = 8;
    BasisSpec basis = BasisSpec::cubic_bspline(8);
    ActivationSpec activation;

    static ModelSpec make(int d, int m, int p,
                          BasisFamily family = BasisFamily::CubicBspline,
                          ActivationFamily act = ActivationFamily::Tanh);

    Eigen::Index param_count() const {
        return static_cast<Eigen::Index>(m) * p * (d + 1);
    }
    Eigen::Index a_count() const { return static_cast<Eigen::Index>(m) * d * p; }
    Eigen::Index c_count() const { return static_cast<Eigen::Index>(m) * p; }

    void validate() const;
};

/// Trainable parameters Theta = (a, c).
///
/// a.row(j) holds unit j's first-layer coefficients with the fixed (i,k)
/// ordering: entry (j, i*p + k) = a_{i,j,k}. c.row(j) holds unit j's output
/// coefficients c_{j,k}. The flat order is the a-block (unit-major, then
/// input index, then basis index) followed by the c-block (unit-major, then
/// basis index); flatten/unflatten round-trip exactly.
struct ParamVector {
    Eigen::MatrixXd a; // m x (d*p)
    Eigen::MatrixXd c; // m x p

    static ParamVector zero(const ModelSpec& spec);

    Eigen::VectorXd flatten() const;
    static ParamVector unflatten(const ModelSpec& spec, const Eigen::VectorXd& theta);

    double squared_norm() const { return a.squaredNorm() + c.squaredNorm(); }
    double norm() const;

    /// max_j ||c_j - other.c_j||_2 (per-unit output-coefficient drift).
    double max_unit_c_dist(const ParamVector& other) const;
    double dist(const ParamVector& other) const;

    ParamVector& axpy(double alpha, const ParamVector& g); // this += alpha*g
};

/// Exact Hessian of f_Theta(x), stored per unit: the model decouples across
/// hidden units, so aa and ac are block diagonal and cc vanishes.
struct HessianBlocks {
    std::vector<Eigen::MatrixXd> aa; // m blocks, dp x dp
    std::vector<Eigen::MatrixXd> ac; // m blocks, dp x p
};

/// Independent standard-normal entries for both blocks; identical seed gives
/// a bit-identical draw.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

double forward(const ModelSpec& spec, const ParamVector& params,
               const Eigen::Ref<const Eigen::VectorXd>& x);

ParamVector grad_f(const ModelSpec& spec, const ParamVector& params,
                   const Eigen::Ref<const Eigen::VectorXd>& x);

/// Verification-scale only: refuses when m*p*(d+1) > 5000.
HessianBlocks hessian_f(const ModelSpec& spec, const ParamVector& params,
                        const Eigen::Ref<const Eigen::VectorXd>& x);

/// Dense symmetric Hessian in the flat parameter order (a-block then c-block).
Eigen::MatrixXd assemble_hessian(const ModelSpec& spec, const HessianBlocks& blocks);

/// Spectral norm of the full Hessian; cheap because the Hessian is block
/// diagonal across units up to a permutation.
double hessian_operator_norm(const ModelSpec& spec, const HessianBlocks& blocks);

/// f for every row of X (n x d).
Eigen::VectorXd batch_forward(const ModelSpec& spec, const ParamVector& params,
                              const Eigen::Ref<const Eigen::MatrixXd>& X);

/// One chunked pass over the batch: fills f_i for every sample; when grad is
/// non-null, also accumulates grad += sum_i weight(i, f_i) * grad_f(x_i).
/// weight(i, f_i) may depend only on sample i (e.g. loss derivative), so a
/// single pass suffices.
void batch_forward_and_grad(const ModelSpec& spec, const ParamVector& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            Eigen::VectorXd& f_out,
                            const std::function<double(Eigen::Index, double)>& weight,
                            ParamVector* grad, Eigen::Index chunk = 1024);

/// JSON round-trip (header d,m,p,basis,activation + flat theta array).
std::string params_to_json(const ModelSpec& spec, const ParamVector& params);
std::pair<ModelSpec, ParamVector> params_from_json(const std::string& text);
void save_params_json(const std::string& path, const ModelSpec& spec, const ParamVector& params);
std::pair<ModelSpec, ParamVector> load_params_json(const std::string& path);

} // namespace kan
