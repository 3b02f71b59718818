#include <doctest.h>

#include <cmath>

#include "kan/basis.hpp"
#include "kan/rng.hpp"

using namespace kan;

TEST_CASE("hat basis at knots and midpoints") {
    const BasisSpec spec = BasisSpec::hat(2, -1.0, 1.0);
    const Eigen::VectorXd at_left = eval_basis(spec, -1.0);
    CHECK(at_left[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(at_left[1] == doctest::Approx(0.0).epsilon(1e-15));

    const Eigen::VectorXd mid = eval_basis(spec, 0.0);
    CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-15));

    // slope +-1/Delta with Delta = 2
    Eigen::VectorXd val, d1, d2;
    eval_basis_jet(spec, 0.0, val, d1, d2);
    CHECK(d1[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(d1[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partition of unity and nonnegativity") {
    for (const BasisSpec& spec :
         {BasisSpec::hat(2), BasisSpec::hat(7), BasisSpec::cubic_bspline(4),
          BasisSpec::cubic_bspline(8), BasisSpec::cubic_bspline(13)}) {
        for (int i = 0; i <= 1000; ++i) {
            const double v = spec.lo + (spec.hi - spec.lo) * i / 1000.0;
            const Eigen::VectorXd b = eval_basis(spec, v);
            CHECK(std::abs(b.sum() - 1.0) < 1e-12);
            CHECK(b.minCoeff() >= 0.0);
            CHECK(b.maxCoeff() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("cubic derivative rows sum to zero") {
    const BasisSpec spec = BasisSpec::cubic_bspline(8);
    Eigen::VectorXd val, d1, d2;
    for (double v : {-0.93, -0.4, 0.01, 0.55, 0.99}) {
        eval_basis_jet(spec, v, val, d1, d2);
        CHECK(std::abs(d1.sum()) < 1e-10);
        CHECK(std::abs(d2.sum()) < 1e-9);
    }
}

TEST_CASE("jets match finite differences of the level below") {
    NormalStream rng(321);
    const double h = 1e-5;
    for (const BasisSpec& spec : {BasisSpec::hat(6), BasisSpec::cubic_bspline(8)}) {
        int tested = 0;
        while (tested < 100) {
            const double v = -0.995 + 1.99 * rng.next_uniform();
            bool near_knot = false;
            for (double t : spec.knots)
                if (std::abs(v - t) < 1e-3) near_knot = true;
            if (near_knot) continue;
            ++tested;

            Eigen::VectorXd val, d1, d2, vp, vm, d1p, d1m, scratch;
            eval_basis_jet(spec, v, val, d1, d2);
            eval_basis_jet(spec, v + h, vp, d1p, scratch);
            eval_basis_jet(spec, v - h, vm, d1m, scratch);
            const Eigen::VectorXd fd1 = (vp - vm) / (2.0 * h);
            CHECK((d1 - fd1).cwiseAbs().maxCoeff() <
                  1e-6 * std::max(1.0, d1.cwiseAbs().maxCoeff()));
            if (spec.family == BasisFamily::CubicBspline) {
                const Eigen::VectorXd fd2 = (d1p - d1m) / (2.0 * h);
                CHECK((d2 - fd2).cwiseAbs().maxCoeff() <
                      1e-5 * std::max(1.0, d2.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("out-of-domain inputs clamp to the endpoint") {
    for (const BasisSpec& spec : {BasisSpec::hat(4), BasisSpec::cubic_bspline(6)}) {
        CHECK((eval_basis(spec, -3.0) - eval_basis(spec, spec.lo)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((eval_basis(spec, 42.0) - eval_basis(spec, spec.hi)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("activation jets") {
    const ActivationSpec tanh_spec{ActivationFamily::Tanh};
    const ActivationJet t0 = eval_activation_jet(tanh_spec, 0.0);
    CHECK(t0.value == 0.0);
    CHECK(t0.d1 == 1.0);
    CHECK(t0.d2 == 0.0);

    const ActivationSpec sig_spec{ActivationFamily::Sigmoid};
    const ActivationJet s0 = eval_activation_jet(sig_spec, 0.0);
    CHECK(s0.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s0.d1 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(std::abs(s0.d2) < 1e-16);

    NormalStream rng(99);
    const double h = 1e-5;
    for (int t = 0; t < 100; ++t) {
        const double u = -6.0 + 12.0 * rng.next_uniform();
        for (const ActivationSpec& spec : {tanh_spec, sig_spec}) {
            const ActivationJet jet = eval_activation_jet(spec, u);
            const double fd = (eval_activation_jet(spec, u + h).value -
                               eval_activation_jet(spec, u - h).value) / (2.0 * h);
            CHECK(std::abs(jet.d1 - fd) < 1e-6 * std::max(1.0, std::abs(jet.d1)));
        }
    }
}

TEST_CASE("bound constants") {
    const ActivationSpec tanh_spec{ActivationFamily::Tanh};

    SUBCASE("tanh suprema") {
        const BoundConstants bc = bound_constants(BasisSpec::cubic_bspline(8), tanh_spec);
        CHECK(bc.act_value == doctest::Approx(1.0));
        CHECK(bc.act_deriv1 == doctest::Approx(1.0));
        // max |tanh''| = 4/(3 sqrt 3)
        CHECK(bc.act_deriv2 == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-9));
        CHECK(bc.act_deriv2 == doctest::Approx(0.7698).epsilon(1e-4));
    }

    SUBCASE("hat p=2 on [-1,1]") {
        const BoundConstants bc = bound_constants(BasisSpec::hat(2), tanh_spec);
        CHECK(bc.b_value == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(bc.b_deriv1 == doctest::Approx(0.5).epsilon(1e-8));
        CHECK_FALSE(bc.basis_second_deriv_valid);
    }

    SUBCASE("cubic values bounded by 1") {
        const BoundConstants bc = bound_constants(BasisSpec::cubic_bspline(8), tanh_spec);
        CHECK(bc.b_value <= 1.0 + 1e-8);
        CHECK(bc.basis_second_deriv_valid);
        CHECK(bc.b_deriv2 > 0.0);
    }

    SUBCASE("bounds dominate an offset re-sampling") {
        for (const BasisSpec& spec : {BasisSpec::hat(5), BasisSpec::cubic_bspline(8)}) {
            const BoundConstants bc = bound_constants(spec, tanh_spec);
            Eigen::VectorXd val, d1, d2;
            for (int i = 0; i < 10007; ++i) {
                const double v = spec.lo + (spec.hi - spec.lo) * (i + 0.618) / 10007.0;
                eval_basis_jet(spec, v, val, d1, d2);
                CHECK(val.cwiseAbs().maxCoeff() <= bc.b_value);
                CHECK(d1.cwiseAbs().maxCoeff() <= bc.b_deriv1);
                if (bc.basis_second_deriv_valid)
                    CHECK(d2.cwiseAbs().maxCoeff() <= bc.b_deriv2);
            }
        }
    }
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(BasisSpec::hat(1), config_error);
    CHECK_THROWS_AS(BasisSpec::cubic_bspline(3), config_error);
    CHECK_THROWS_AS(BasisSpec::hat(4, 1.0, -1.0), config_error);
}
