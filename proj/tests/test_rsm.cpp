#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "uqfarm/execution.hpp"
#include "uqfarm/rsm.hpp"
#include "uqfarm/sampler.hpp"
#include "uqfarm/simulator.hpp"

using namespace uqfarm;
using uqfarm::testing::generic_spec;
using uqfarm::testing::planted_spec;

namespace {

SampleMatrix matrix_of(const Matrix& values, std::vector<std::string> names) {
    SampleMatrix s;
    s.values = values;
    s.variable_names = std::move(names);
    s.origin = SampleOrigin::RegularDesign;
    return s;
}

} // namespace

TEST_CASE("noiseless linear data: exact coefficient recovery and zero residual") {
    Matrix x(5, 2);
    x << 0, 0, 1, 0, 0, 1, 1, 1, 2, -1;
    auto samples = matrix_of(x, {"x1", "x2"});
    Matrix y(5, 1);
    for (int n = 0; n < 5; ++n) y(n, 0) = 1.0 + 2.0 * x(n, 0) + 3.0 * x(n, 1);

    auto model = fit_rse(samples, y, {"m"}, Basis::LinearIntercept);
    CHECK(model.coefficients(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.coefficients(0, 1) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(model.coefficients(0, 2) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(model.training_stats.residual_rms[0] < 1e-9);
    CHECK(model.training_stats.n_train == 5);

    // predict on the training set reproduces y
    auto yhat = predict(model, samples);
    CHECK((yhat - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant response: intercept c, zero slopes") {
    Matrix x(6, 2);
    x << 0, 0, 1, 0, 0, 1, 1, 1, 2, -1, -1, 2;
    auto samples = matrix_of(x, {"a", "b"});
    Matrix y = Matrix::Constant(6, 1, 4.25);
    auto model = fit_rse(samples, y, {"m"}, Basis::LinearIntercept);
    CHECK(model.coefficients(0, 0) == doctest::Approx(4.25).epsilon(1e-9));
    CHECK(std::abs(model.coefficients(0, 1)) < 1e-9);
    CHECK(std::abs(model.coefficients(0, 2)) < 1e-9);
}

TEST_CASE("duplicated column triggers RankDeficient naming both columns") {
    Matrix x(6, 2);
    x << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6;
    auto samples = matrix_of(x, {"left", "right"});
    Matrix y = x.col(0);
    try {
        fit_rse(samples, y, {"m"}, Basis::LinearIntercept);
        FAIL("expected RankDeficient");
    } catch (const RankDeficient& e) {
        std::string msg = e.what();
        CHECK(msg.find("left") != std::string::npos);
        CHECK(msg.find("right") != std::string::npos);
    }
}

TEST_CASE("predict: direct arithmetic and zero coefficients") {
    SurrogateModel model;
    model.basis = Basis::LinearIntercept;
    model.variable_names = {"u", "v"};
    model.metric_names = {"m"};
    model.coefficients = Matrix(1, 3);
    model.coefficients << 1.0, 2.0, 3.0;
    Matrix x(1, 2);
    x << 4.0, 5.0;
    auto yhat = predict(model, matrix_of(x, {"u", "v"}));
    CHECK(yhat(0, 0) == doctest::Approx(24.0)); // 1 + 8 + 15

    model.coefficients.setZero();
    CHECK(predict(model, matrix_of(x, {"u", "v"}))(0, 0) == 0.0);

    // wrong column order is rejected
    CHECK_THROWS_AS(predict(model, matrix_of(x, {"v", "u"})), ShapeMismatch);
}

TEST_CASE("residual orthogonality on noisy data") {
    auto spec = generic_spec(4, 1, 3);
    auto samples = draw_monte_carlo(spec, 50, 3);
    samples.origin = SampleOrigin::RegularDesign;
    // noisy response: linear truth plus deterministic pseudo-noise
    Matrix y(50, 1);
    for (int n = 0; n < 50; ++n)
        y(n, 0) = 2.0 + samples.values.row(n).sum() + std::sin(7.0 * n);
    auto model = fit_rse(samples, y, {"m"}, Basis::LinearIntercept);
    Matrix phi = build_basis(samples, Basis::LinearIntercept);
    Vector grad = phi.transpose() * (phi * model.coefficients.row(0).transpose() - y.col(0));
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-6 * y.col(0).norm());
}

TEST_CASE("affine-output equivariance: fit of a*y + c scales coefficients") {
    auto spec = generic_spec(3, 1, 5);
    auto samples = draw_monte_carlo(spec, 40, 8);
    Matrix y(40, 1);
    for (int n = 0; n < 40; ++n)
        y(n, 0) = 1.0 + 0.5 * samples.values(n, 0) - samples.values(n, 2) + std::cos(3.0 * n);
    auto base = fit_rse(samples, y, {"m"}, Basis::LinearIntercept);
    const double a = -2.5, c = 7.0;
    auto scaled = fit_rse(samples, (a * y.array() + c).matrix(), {"m"}, Basis::LinearIntercept);
    CHECK(scaled.coefficients(0, 0) ==
          doctest::Approx(a * base.coefficients(0, 0) + c).epsilon(1e-8));
    for (int i = 1; i <= 3; ++i)
        CHECK(scaled.coefficients(0, i) ==
              doctest::Approx(a * base.coefficients(0, i)).epsilon(1e-8));
}

TEST_CASE("quadratic basis recovers a pure-quadratic truth") {
    auto spec = generic_spec(2, 1, 6);
    auto samples = draw_regular_design(spec, 20, 4);
    Matrix y(20, 1);
    for (int n = 0; n < 20; ++n) {
        double u = samples.values(n, 0), v = samples.values(n, 1);
        y(n, 0) = 3.0 - u + 0.5 * v + 0.25 * u * u - 0.1 * v * v;
    }
    auto model = fit_rse(samples, y, {"m"}, Basis::LinearPlusQuadDiag);
    Vector expect(5);
    expect << 3.0, -1.0, 0.5, 0.25, -0.1;
    for (int i = 0; i < 5; ++i)
        CHECK(model.coefficients(0, i) == doctest::Approx(expect[i]).epsilon(1e-7));
}

TEST_CASE("surrogate matches the Q=0 synthetic truth everywhere") {
    auto spec = planted_spec(8, 3, 2, 21);
    auto sim = make_simulator(spec);
    auto design = draw_regular_design(spec, spec.n_rsm, 31);
    LocalBackend backend(sim, 1);
    std::vector<std::string> metric_names;
    for (const auto& m : spec.metrics) metric_names.push_back(m.name);
    auto responses = to_response_set(backend.run_batch(design, 31), metric_names);
    auto model = fit_rse(design, responses.summaries, metric_names, Basis::LinearIntercept);

    auto probe = draw_monte_carlo(spec, 200, 32);
    auto truth = to_response_set(backend.run_batch(probe, 32), metric_names);
    auto yhat = predict(model, probe);
    CHECK(((yhat - truth.summaries).cwiseAbs().array() /
           truth.summaries.cwiseAbs().array().max(1.0))
              .maxCoeff() < 1e-6);
}

TEST_CASE("series coefficients propagate full time series through the surrogate") {
    auto spec = planted_spec(5, 2, 2, 13);
    auto sim = make_simulator(spec);
    auto design = draw_regular_design(spec, spec.n_rsm, 1);
    LocalBackend backend(sim, 1);
    std::vector<std::string> metric_names{spec.metrics[0].name, spec.metrics[1].name};
    auto responses = to_response_set(backend.run_batch(design, 1), metric_names);
    auto model = fit_rse(design, responses.summaries, metric_names, Basis::LinearIntercept);
    CHECK_THROWS_AS(predict_responses(model, design), ValidationError);
    fit_series(model, design, responses);
    auto rebuilt = predict_responses(model, design);
    for (std::size_t j = 0; j < rebuilt.series.size(); ++j)
        CHECK((rebuilt.series[j] - responses.series[j]).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("surrogate CSV round-trip") {
    SurrogateModel model;
    model.basis = Basis::LinearIntercept;
    model.variable_names = {"u", "v", "w"};
    model.metric_names = {"m0", "m1"};
    model.coefficients = Matrix(2, 4);
    model.coefficients << 1.5, -2.0, 0.0, 3.25, 0.1, 0.2, 0.3, 0.4;
    auto path = std::filesystem::temp_directory_path() / "uqfarm_surrogate_test.csv";
    write_surrogate_csv(path.string(), model);
    auto back = read_surrogate_csv(path.string());
    CHECK(back.basis == Basis::LinearIntercept);
    CHECK(back.variable_names == model.variable_names);
    CHECK(back.metric_names == model.metric_names);
    CHECK((back.coefficients - model.coefficients).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("shape guards: too few samples and mismatched responses") {
    auto spec = generic_spec(3, 1, 2);
    auto samples = draw_monte_carlo(spec, 4, 2); // 4 <= p = 4
    CHECK_THROWS_AS(fit_rse(samples, Matrix::Zero(4, 1), {"m"}, Basis::LinearIntercept),
                    ValidationError);
    auto enough = draw_monte_carlo(spec, 10, 2);
    CHECK_THROWS_AS(fit_rse(enough, Matrix::Zero(9, 1), {"m"}, Basis::LinearIntercept),
                    ShapeMismatch);
}
