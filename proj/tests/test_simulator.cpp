#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "uqfarm/config.hpp"
#include "uqfarm/simulator.hpp"

using namespace uqfarm;
using uqfarm::testing::default_config_path;
using uqfarm::testing::generic_spec;
using uqfarm::testing::make_spec;
using uqfarm::testing::planted_spec;

namespace {

const SyntheticSimulator& as_synthetic(const SimulatorHandle& handle) {
    return dynamic_cast<const SyntheticSimulator&>(*handle);
}

SimulationJob job_at(const Vector& x, std::int64_t id = 0) {
    return {"job-test-" + std::to_string(id), id, x};
}

} // namespace

TEST_CASE("nominal inputs: series is baseline times the cycle profile") {
    auto spec = planted_spec(6, 2);
    auto sim = make_simulator(spec);
    const auto& model = as_synthetic(sim).model();
    auto result = sim->simulate(job_at(spec.means()));
    REQUIRE(result.status == SimStatus::Ok);
    REQUIRE(result.series.rows() == 3);
    REQUIRE(result.series.cols() == model.t_steps);
    for (Eigen::Index j = 0; j < result.series.rows(); ++j) {
        for (Eigen::Index t = 0; t < model.t_steps; ++t)
            CHECK(result.series(j, t) ==
                  doctest::Approx(model.baseline[j] * model.profile(t)).epsilon(1e-12));
        CHECK(result.summaries[j] == doctest::Approx(model.baseline[j]).epsilon(1e-12));
    }
}

TEST_CASE("one key variable perturbed by +sigma: closed-form summary shift") {
    auto spec = planted_spec(6, 2);
    auto sim = make_simulator(spec);
    const auto& model = as_synthetic(sim).model();
    const Eigen::Index i = 1; // a key variable
    Vector x = spec.means();
    double sigma = spec.variables[static_cast<std::size_t>(i)].std_dev;
    x[i] += sigma;
    auto result = sim->simulate(job_at(x));
    for (Eigen::Index j = 0; j < result.summaries.size(); ++j) {
        double expect = model.baseline[j] + model.coefficients(j, i) * sigma +
                        model.quad_diag(j, i) * sigma * sigma;
        CHECK(result.summaries[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("synthetic_response: settle phase is zero, cycle end is exact") {
    auto spec = planted_spec(5, 2);
    auto sim = make_simulator(spec);
    const auto& model = as_synthetic(sim).model();
    Vector mu = spec.means();
    for (Eigen::Index t = 0; t < model.settle_steps; ++t)
        CHECK(synthetic_response(model, mu, t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((synthetic_response(model, mu, model.t_steps - 1) - model.baseline)
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    // x = mu + e_i * delta with Q=0: baseline + C column * delta at the end
    const Eigen::Index i = 0;
    const double delta = 0.37;
    Vector x = mu;
    x[i] += delta;
    Vector expect = model.baseline + model.coefficients.col(i) * delta;
    CHECK((synthetic_response(model, x, model.t_steps - 1) - expect).cwiseAbs().maxCoeff() <
          1e-10);

    CHECK_THROWS_AS(synthetic_response(model, mu, model.t_steps), IndexOutOfRange);
    CHECK_THROWS_AS(synthetic_response(model, mu, -1), IndexOutOfRange);
}

TEST_CASE("cycle profile is monotone non-decreasing and reaches 1") {
    auto spec = planted_spec(4, 1);
    auto sim = make_simulator(spec);
    const auto& model = as_synthetic(sim).model();
    double prev = -1.0;
    for (Eigen::Index t = 0; t < model.t_steps; ++t) {
        double g = model.profile(t);
        CHECK(g >= prev);
        prev = g;
    }
    CHECK(model.profile(model.t_steps - 1) == doctest::Approx(1.0));
    for (Eigen::Index t = 0; t < model.settle_steps; ++t) CHECK(model.profile(t) == 0.0);
}

TEST_CASE("purity and determinism: equal inputs give equal results") {
    auto spec = planted_spec(6, 2);
    auto sim = make_simulator(spec);
    auto samples = spec.means();
    samples[2] += 0.5;
    auto r1 = sim->simulate(job_at(samples));
    auto r2 = sim->simulate(job_at(samples));
    CHECK((r1.series.array() == r2.series.array()).all());
    CHECK((r1.summaries.array() == r2.summaries.array()).all());
}

TEST_CASE("generated model satisfies and enforces the planted-dominance invariant") {
    auto spec = planted_spec(10, 3);
    auto model = as_synthetic(make_simulator(spec)).model();
    CHECK_NOTHROW(model.validate());

    // every key column beats every minor column by the dominance factor
    double max_minor = 0.0;
    for (Eigen::Index j = 0; j < model.coefficients.rows(); ++j)
        for (Eigen::Index i = 3; i < model.coefficients.cols(); ++i)
            max_minor = std::max(max_minor, std::abs(model.coefficients(j, i)));
    for (Eigen::Index i = 0; i < 3; ++i) {
        double best = 0.0;
        for (Eigen::Index j = 0; j < model.coefficients.rows(); ++j)
            best = std::max(best, std::abs(model.coefficients(j, i)));
        CHECK(best >= model.dominance_factor * max_minor);
    }

    // breaking the invariant is caught: key 0 loses its effect everywhere
    auto broken = model;
    broken.coefficients.col(0).setZero();
    CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("finite-difference sensitivity ranks every key above every minor variable") {
    auto spec = planted_spec(12, 4);
    auto sim = make_simulator(spec);
    const auto& model = as_synthetic(sim).model();
    const Eigen::Index d = 12, m = model.baseline.size();
    Matrix fd(m, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        double sigma = spec.variables[static_cast<std::size_t>(i)].std_dev;
        Vector hi = spec.means(), lo = spec.means();
        hi[i] += sigma * 0.01;
        lo[i] -= sigma * 0.01;
        Vector diff = (sim->simulate(job_at(hi)).summaries - sim->simulate(job_at(lo)).summaries) /
                      (0.02 * sigma);
        fd.col(i) = diff.cwiseAbs() * sigma;
    }
    double best_minor = fd.rightCols(d - 4).maxCoeff();
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(fd.col(i).maxCoeff() > best_minor);
}

TEST_CASE("default config: flexion-angle metric peaks near 135 at cycle end") {
    auto spec = load_study_spec_file(default_config_path());
    auto sim = make_simulator(spec);
    auto result = sim->simulate(job_at(spec.means()));
    CHECK(result.summaries[0] == doctest::Approx(135.0).epsilon(1e-9));
    CHECK(result.series(0, sim->n_steps() - 1) == doctest::Approx(135.0).epsilon(1e-9));
}

TEST_CASE("generation is deterministic in the seed") {
    auto spec = planted_spec(8, 2);
    auto m1 = as_synthetic(make_simulator(spec)).model();
    auto m2 = as_synthetic(make_simulator(spec)).model();
    CHECK((m1.coefficients.array() == m2.coefficients.array()).all());
    auto spec2 = spec;
    spec2.seed += 1;
    auto m3 = as_synthetic(make_simulator(spec2)).model();
    CHECK_FALSE((m1.coefficients.array() == m3.coefficients.array()).all());
}

TEST_CASE("exec simulator: stdout CSV becomes the series, nonzero exit fails the job") {
    auto spec = make_spec({{"a", 1.0, 0.1, ""}}, {"m0", "m1"});
    spec.simulator_json =
        R"({"type":"exec","t_steps":3,"command":"printf '1,2,3\n4,5,6\n'"})";
    auto sim = make_simulator(spec);
    Vector x(1);
    x << 1.0;
    auto result = sim->simulate(job_at(x));
    REQUIRE(result.status == SimStatus::Ok);
    REQUIRE(result.series.rows() == 2);
    REQUIRE(result.series.cols() == 3);
    CHECK(result.series(0, 0) == 1.0);
    CHECK(result.series(1, 2) == 6.0);
    CHECK(result.summaries[0] == doctest::Approx(3.0)); // peak of 1,2,3
    CHECK(result.summaries[1] == doctest::Approx(6.0));

    spec.simulator_json = R"({"type":"exec","t_steps":3,"command":"false"})";
    auto failing = make_simulator(spec);
    auto bad = failing->simulate(job_at(x));
    CHECK(bad.status == SimStatus::Failed);
    CHECK_FALSE(bad.failure_reason.empty());
}

TEST_CASE("job latency is applied and recorded in the duration") {
    auto spec = planted_spec(4, 1, 1, 7, 20.0);
    auto sim = make_simulator(spec);
    auto result = sim->simulate(job_at(spec.means()));
    CHECK(result.duration_ms >= 19.0);
}
