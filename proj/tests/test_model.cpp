#include <doctest.h>

#include <cmath>

#include "kan/loss.hpp"
#include "kan/model.hpp"
#include "kan/rng.hpp"
#include "support/oracles.hpp"

using namespace kan;

namespace {

Eigen::VectorXd ball_point(int d, NormalStream& rng) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = 2.0 * rng.next_uniform() - 1.0;
    return x / std::sqrt(static_cast<double>(d));
}

} // namespace

TEST_CASE("parameter shapes and flatten round-trip") {
    const ModelSpec spec = ModelSpec::make(3, 4, 8);
    const ParamVector params = init_params(spec, 7);
    CHECK(params.a.rows() == 4);
    CHECK(params.a.cols() == 24);
    CHECK(params.c.rows() == 4);
    CHECK(params.c.cols() == 8);

    const Eigen::VectorXd theta = params.flatten();
    CHECK(theta.size() == spec.param_count());
    // a-block first, unit-major / input-major / basis-minor, then c-block
    CHECK(theta[0] == params.a(0, 0));
    CHECK(theta[8] == params.a(0, 8));
    CHECK(theta[24] == params.a(1, 0));
    CHECK(theta[spec.a_count()] == params.c(0, 0));
    const ParamVector back = ParamVector::unflatten(spec, theta);
    CHECK((back.a - params.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.c - params.c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initialization contract") {
    const ModelSpec spec = ModelSpec::make(3, 4, 8);
    const ParamVector a = init_params(spec, 7);
    const ParamVector b = init_params(spec, 7);
    CHECK((a.flatten() - b.flatten()).cwiseAbs().maxCoeff() == 0.0);
    const ParamVector c = init_params(spec, 8);
    CHECK((a.flatten() - c.flatten()).cwiseAbs().maxCoeff() > 0.0);

    // Gaussian concentration at N = m*p*(d+1)
    const ModelSpec big = ModelSpec::make(10, 256, 8);
    const Eigen::VectorXd theta = init_params(big, 1).flatten();
    const double n = static_cast<double>(theta.size());
    CHECK(theta.size() == big.param_count());
    const double mean = theta.mean();
    const double var = (theta.array() - mean).square().sum() / (n - 1.0);
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
    CHECK(var >= 0.95);
    CHECK(var <= 1.05);
}

TEST_CASE("forward hand example (hat basis)") {
    ModelSpec spec;
    spec.d = 1;
    spec.m = 1;
    spec.p = 2;
    spec.basis = BasisSpec::hat(2);
    spec.activation.family = ActivationFamily::Tanh;

    ParamVector params = ParamVector::zero(spec);
    params.a(0, 0) = 1.0;
    params.a(0, 1) = 1.0;
    params.c(0, 0) = 1.0;
    params.c(0, 1) = 0.0;

    Eigen::VectorXd x(1);
    x << 0.0;
    // pre-activation = 1, u = tanh(1), output = b_1(u) = (1-u)/2
    const double u = std::tanh(1.0);
    CHECK(forward(spec, params, x) == doctest::Approx((1.0 - u) / 2.0).epsilon(1e-12));
    CHECK(forward(spec, params, x) == doctest::Approx(0.119203).epsilon(1e-5));
}

TEST_CASE("zero output layer gives zero output and zero a-gradient") {
    const ModelSpec spec = ModelSpec::make(4, 5, 8);
    ParamVector params = init_params(spec, 3);
    params.c.setZero();
    NormalStream rng(5);
    const Eigen::VectorXd x = ball_point(4, rng);
    CHECK(forward(spec, params, x) == 0.0);
    const ParamVector grad = grad_f(spec, params, x);
    CHECK(grad.a.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grad.c.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("unit duplication scales output by sqrt(2)") {
    const ModelSpec spec = ModelSpec::make(3, 6, 8);
    const ParamVector params = init_params(spec, 11);
    ModelSpec doubled = spec;
    doubled.m = 12;
    ParamVector tiled = ParamVector::zero(doubled);
    tiled.a << params.a, params.a;
    tiled.c << params.c, params.c;
    NormalStream rng(6);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd x = ball_point(3, rng);
        const double f1 = forward(spec, params, x);
        const double f2 = forward(doubled, tiled, x);
        CHECK(std::abs(f2 - std::sqrt(2.0) * f1) <= 1e-12 * std::max(1.0, std::abs(f1)));
    }
}

TEST_CASE("gradient c-block norm bound sqrt(p) B_b") {
    const ModelSpec spec = ModelSpec::make(5, 7, 8);
    const BoundConstants bc = bound_constants(spec.basis, spec.activation);
    NormalStream rng(17);
    for (int t = 0; t < 20; ++t) {
        const ParamVector params = init_params(spec, static_cast<std::uint64_t>(t));
        const Eigen::VectorXd x = ball_point(5, rng);
        const ParamVector grad = grad_f(spec, params, x);
        CHECK(grad.c.norm() <= std::sqrt(static_cast<double>(spec.p)) * bc.b_value + 1e-12);
    }
}

TEST_CASE("analytic gradient matches finite differences") {
    NormalStream rng(2024);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int d = 1 + static_cast<int>(rng.next_index(8));
        const int m = 1 + static_cast<int>(rng.next_index(8));
        const int p = 4 + static_cast<int>(rng.next_index(5));
        const ModelSpec spec = ModelSpec::make(d, m, p);
        const ParamVector params = init_params(spec, 1000 + static_cast<std::uint64_t>(inst));
        const Eigen::VectorXd x = ball_point(d, rng);

        const Eigen::VectorXd analytic = grad_f(spec, params, x).flatten();
        const Eigen::VectorXd fd = oracle::fd_gradient(spec, params, x);
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
            const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-4});
            worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("analytic hessian matches finite differences") {
    NormalStream rng(555);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const int d = 1 + static_cast<int>(rng.next_index(3));
        const int m = 1 + static_cast<int>(rng.next_index(4));
        const ModelSpec spec = ModelSpec::make(d, m, 4);
        REQUIRE(spec.param_count() <= 200);
        const ParamVector params = init_params(spec, 3000 + static_cast<std::uint64_t>(inst));
        const Eigen::VectorXd x = ball_point(d, rng);

        const HessianBlocks blocks = hessian_f(spec, params, x);
        const Eigen::MatrixXd analytic = assemble_hessian(spec, blocks);
        CHECK((analytic - analytic.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        // cc block is identically zero
        CHECK(analytic.block(spec.a_count(), spec.a_count(), spec.c_count(), spec.c_count())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        const Eigen::MatrixXd fd = oracle::fd_hessian(spec, params, x);
        worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("c = 0 zeroes the aa block") {
    const ModelSpec spec = ModelSpec::make(2, 3, 4);
    ParamVector params = init_params(spec, 12);
    params.c.setZero();
    NormalStream rng(8);
    const HessianBlocks blocks = hessian_f(spec, params, ball_point(2, rng));
    for (const Eigen::MatrixXd& aa : blocks.aa) CHECK(aa.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hessian size guard") {
    const ModelSpec spec = ModelSpec::make(10, 64, 8); // 64*8*11 > 5000
    const ParamVector params = init_params(spec, 1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
    CHECK_THROWS_AS((void)hessian_f(spec, params, x), input_error);
}

TEST_CASE("batch forward agrees with the scalar path") {
    const ModelSpec spec = ModelSpec::make(6, 9, 8);
    const ParamVector params = init_params(spec, 77);
    NormalStream rng(78);
    Eigen::MatrixXd X(25, 6);
    for (int i = 0; i < 25; ++i) X.row(i) = ball_point(6, rng).transpose();
    const Eigen::VectorXd f = batch_forward(spec, params, X);
    for (int i = 0; i < 25; ++i)
        CHECK(f[i] == doctest::Approx(forward(spec, params, X.row(i))).epsilon(1e-13));
}

TEST_CASE("dimension mismatch raises input errors") {
    const ModelSpec spec = ModelSpec::make(4, 3, 8);
    const ParamVector params = init_params(spec, 7);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS((void)forward(spec, params, x), input_error);
    CHECK_THROWS_AS((void)grad_f(spec, params, x), input_error);
}

TEST_CASE("JSON serialization round-trip") {
    const ModelSpec spec = ModelSpec::make(3, 4, 5, BasisFamily::CubicBspline,
                                           ActivationFamily::Sigmoid);
    const ParamVector params = init_params(spec, 4242);
    const std::string doc = params_to_json(spec, params);
    const auto [spec2, params2] = params_from_json(doc);
    CHECK(spec2.d == spec.d);
    CHECK(spec2.m == spec.m);
    CHECK(spec2.p == spec.p);
    CHECK(spec2.activation.family == ActivationFamily::Sigmoid);
    CHECK((params2.flatten() - params.flatten()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(params_from_json("{\"d\":"), format_error);
}
