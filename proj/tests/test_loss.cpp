#include <doctest.h>

#include <cmath>

#include "kan/loss.hpp"
#include "kan/rng.hpp"

using namespace kan;

TEST_CASE("loss jet anchors") {
    const LossJet zero = loss_jet(0.0);
    CHECK(zero.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(zero.d1 == -0.5);
    CHECK(zero.d2 == 0.25);

    CHECK(loss_jet(50.0).value > 0.0);
    CHECK(loss_jet(50.0).value < 1e-20);
    CHECK(loss_jet(-50.0).value == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(std::isfinite(loss_jet(1e6).value));
    CHECK(std::isfinite(loss_jet(-1e6).value));
}

TEST_CASE("assumption grid: bounded, convex, self-bounded") {
    for (int i = 0; i <= 60000; ++i) {
        const double u = -30.0 + i * 1e-3;
        const LossJet jet = loss_jet(u);
        CHECK(jet.value >= 0.0);
        CHECK(std::abs(jet.d1) <= 1.0);
        CHECK(jet.d2 <= 0.25 + 1e-12);
        CHECK(jet.d2 >= 0.0);
        CHECK(std::abs(jet.d1) <= jet.value + 1e-15);
    }
}

TEST_CASE("loss jet matches finite differences") {
    NormalStream rng(2);
    const double h = 1e-6;
    for (int t = 0; t < 200; ++t) {
        const double u = -10.0 + 20.0 * rng.next_uniform();
        const LossJet jet = loss_jet(u);
        const double fd1 = (loss_jet(u + h).value - loss_jet(u - h).value) / (2.0 * h);
        const double fd2 = (loss_jet(u + h).d1 - loss_jet(u - h).d1) / (2.0 * h);
        CHECK(std::abs(jet.d1 - fd1) < 1e-6 * std::max(std::abs(jet.d1), 1e-3));
        CHECK(std::abs(jet.d2 - fd2) < 1e-6 * std::max(std::abs(jet.d2), 1e-3));
    }
}

namespace {

SampleSet tiny_set(int n, int d, std::uint64_t seed) {
    SampleSet data;
    NormalStream rng(seed);
    data.x.resize(n, d);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.x(i, j) = (2.0 * rng.next_uniform() - 1.0) / std::sqrt(d);
        data.y[i] = rng.next_uniform() < 0.5 ? -1 : 1;
    }
    if ((data.y.array() == 1).count() == 0) data.y[0] = 1;
    if ((data.y.array() == -1).count() == 0) data.y[1] = -1;
    return data;
}

} // namespace

TEST_CASE("empirical risk properties") {
    const ModelSpec spec = ModelSpec::make(4, 6, 8);
    const SampleSet data = tiny_set(30, 4, 5);

    SUBCASE("zero output layer gives log 2 exactly") {
        ParamVector params = init_params(spec, 1);
        params.c.setZero();
        CHECK(empirical_risk(spec, params, data) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(accuracy(spec, params, data) == 0.0); // ties count as errors
    }

    SUBCASE("single sample equals the pointwise loss") {
        const ParamVector params = init_params(spec, 2);
        SampleSet one;
        one.x = data.x.topRows(1);
        one.y = data.y.head(1);
        const double f = forward(spec, params, one.x.row(0));
        CHECK(empirical_risk(spec, params, one) ==
              doctest::Approx(loss_jet(one.y[0] * f).value).epsilon(1e-14));
    }

    SUBCASE("duplicating the dataset leaves the mean unchanged") {
        const ParamVector params = init_params(spec, 3);
        SampleSet doubled;
        doubled.x.resize(2 * data.size(), data.dim());
        doubled.x << data.x, data.x;
        doubled.y.resize(2 * data.size());
        doubled.y << data.y, data.y;
        CHECK(empirical_risk(spec, params, doubled) ==
              doctest::Approx(empirical_risk(spec, params, data)).epsilon(1e-13));
    }

    SUBCASE("label flip maps accuracy to 1 - acc - ties") {
        const ParamVector params = init_params(spec, 4);
        const double acc = accuracy(spec, params, data);
        SampleSet flipped = data;
        flipped.y = -flipped.y;
        const Eigen::VectorXd f = batch_forward(spec, params, data.x);
        int ties = 0;
        for (Eigen::Index i = 0; i < f.size(); ++i)
            if (f[i] == 0.0) ++ties;
        const double tie_frac = static_cast<double>(ties) / static_cast<double>(data.size());
        CHECK(accuracy(spec, params, flipped) ==
              doctest::Approx(1.0 - acc - tie_frac).epsilon(1e-13));
    }

    SUBCASE("empty dataset is an input error") {
        SampleSet empty;
        empty.x.resize(0, 4);
        empty.y.resize(0);
        const ParamVector params = init_params(spec, 1);
        CHECK_THROWS_AS((void)empirical_risk(spec, params, empty), input_error);
        CHECK_THROWS_AS((void)accuracy(spec, params, empty), input_error);
    }
}

TEST_CASE("batch gradient matches direct per-sample assembly") {
    const ModelSpec spec = ModelSpec::make(3, 4, 8);
    const ParamVector params = init_params(spec, 9);
    const SampleSet data = tiny_set(17, 3, 6);

    const BatchLoss bl = batch_loss(spec, params, data, true);
    REQUIRE(bl.has_grad);

    ParamVector manual = ParamVector::zero(spec);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double f = forward(spec, params, data.x.row(i));
        const double w = loss_jet(data.y[i] * f).d1 * data.y[i] * inv_n;
        manual.axpy(w, grad_f(spec, params, data.x.row(i)));
    }
    CHECK((bl.grad.a - manual.a).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((bl.grad.c - manual.c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("perfectly separated toy set reaches accuracy 1") {
    ModelSpec spec;
    spec.d = 1;
    spec.m = 1;
    spec.p = 2;
    spec.basis = BasisSpec::hat(2);
    ParamVector params = ParamVector::zero(spec);
    params.a(0, 0) = 1.0;
    params.a(0, 1) = 1.0;
    params.c(0, 0) = 1.0;
    params.c(0, 1) = -1.0; // f = b1(u) - b2(u) = -u, u = tanh(pre)

    SampleSet data;
    data.x.resize(4, 1);
    data.x << -0.9, -0.4, 0.3, 0.8;
    data.y.resize(4);
    // pre = (b1(x)+b2(x)) = 1 always, so u = tanh(1) > 0 and f < 0 for all x
    data.y << -1, -1, -1, -1;
    CHECK(accuracy(spec, params, data) == 1.0);
}
