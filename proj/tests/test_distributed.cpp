#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "helpers.hpp"
#include "uqfarm/coordinator.hpp"
#include "uqfarm/execution.hpp"
#include "uqfarm/ledger.hpp"
#include "uqfarm/net.hpp"
#include "uqfarm/protocol.hpp"
#include "uqfarm/sampler.hpp"
#include "uqfarm/worker.hpp"

using namespace uqfarm;
using namespace std::chrono_literals;
using uqfarm::testing::planted_spec;

namespace {

SampleMatrix small_batch(const StudySpec& spec, int n, std::uint64_t seed = 5) {
    return draw_monte_carlo(spec, n, seed);
}

SimulationResult ok_result(const SimulationJob& job) {
    SimulationResult r;
    r.job_id = job.job_id;
    r.series = Matrix::Constant(1, 3, static_cast<double>(job.sample_id));
    r.summaries = Vector::Constant(1, static_cast<double>(job.sample_id));
    r.duration_ms = 1.0;
    return r;
}

SimulationResult failed_result(const SimulationJob& job) {
    SimulationResult r;
    r.job_id = job.job_id;
    r.status = SimStatus::Failed;
    r.failure_reason = "injected";
    return r;
}

} // namespace

TEST_CASE("ledger: one pending job per sample row, deterministic ids") {
    auto spec = planted_spec(78, 19);
    auto samples = small_batch(spec, 800);
    JobLedger ledger(samples, 42, {});
    CHECK(ledger.n_jobs() == 800);
    auto c = ledger.counters();
    CHECK(c.pending == 800);
    CHECK(c.dispatched + c.done + c.failed == 0);

    // resubmitting gives identical ids
    JobLedger again(samples, 42, {});
    CHECK(JobLedger::job_id_for(42, 0) == "job-42-0");
    for (std::int64_t i : {0, 17, 799})
        CHECK(JobLedger::job_id_for(42, i) == JobLedger::job_id_for(42, i));

    SampleMatrix empty;
    empty.variable_names = samples.variable_names;
    empty.values = Matrix(0, samples.cols());
    CHECK_THROWS_AS(JobLedger(empty, 42, {}), ValidationError);
}

TEST_CASE("ledger: FIFO dispatch, exhaustion, unknown worker") {
    auto spec = planted_spec(3, 1);
    JobLedger ledger(small_batch(spec, 3), 7, {});
    CHECK_THROWS_AS(ledger.dispatch_next("ghost"), UnknownWorker);
    ledger.register_worker("w1", 1.0);
    auto j0 = ledger.dispatch_next("w1");
    auto j1 = ledger.dispatch_next("w1");
    auto j2 = ledger.dispatch_next("w1");
    REQUIRE(j0);
    REQUIRE(j1);
    REQUIRE(j2);
    CHECK(j0->sample_id == 0); // lowest sample_id first
    CHECK(j1->sample_id == 1);
    CHECK(j2->sample_id == 2);
    CHECK_FALSE(ledger.dispatch_next("w1").has_value());
    for (const auto& j : {*j0, *j1, *j2}) ledger.report_result("w1", ok_result(j));
    CHECK(ledger.complete());
    CHECK_FALSE(ledger.dispatch_next("w1").has_value()); // all done -> none
}

TEST_CASE("ledger: exactly-once completion, duplicates discarded") {
    auto spec = planted_spec(2, 1);
    JobLedger ledger(small_batch(spec, 2), 7, {});
    ledger.register_worker("w1", 1.0);
    auto job = *ledger.dispatch_next("w1");
    auto first = ok_result(job);
    ledger.report_result("w1", first);
    CHECK(ledger.counters().done == 1);

    auto dup = first;
    dup.summaries = Vector::Constant(1, -999.0);
    ledger.report_result("w1", dup); // discarded, not an error
    CHECK(ledger.counters().done == 1);

    auto job2 = *ledger.dispatch_next("w1");
    ledger.report_result("w1", ok_result(job2));
    auto results = ledger.results();
    REQUIRE(results.size() == 2);
    CHECK(results[0].summaries[0] == 0.0); // first result kept, not the duplicate

    SimulationResult bogus = first;
    bogus.job_id = "job-7-999";
    CHECK_THROWS_AS(ledger.report_result("w1", bogus), UnknownJob);
}

TEST_CASE("ledger: failures requeue until max_attempts, then terminal") {
    auto spec = planted_spec(2, 1);
    DistributedConfig policy;
    policy.max_attempts = 3;
    JobLedger ledger(small_batch(spec, 1), 9, policy);
    ledger.register_worker("w1", 1.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto job = *ledger.dispatch_next("w1");
        ledger.report_result("w1", failed_result(job));
        CHECK(ledger.counters().pending == 1); // re-queued
        CHECK_FALSE(ledger.exhausted());
    }
    auto job = *ledger.dispatch_next("w1");
    ledger.report_result("w1", failed_result(job)); // third strike
    CHECK(ledger.counters().failed == 1);
    CHECK(ledger.exhausted());
    CHECK_FALSE(ledger.complete());
}

TEST_CASE("ledger: timeouts requeue, late result still wins if first") {
    auto spec = planted_spec(2, 1);
    JobLedger ledger(small_batch(spec, 2), 11, {});
    ledger.register_worker("slow", 1.0);
    auto now = JobLedger::Clock::now();
    auto job = *ledger.dispatch_next("slow", now);
    CHECK(ledger.reap_timeouts(now) == 0); // nothing expired yet
    auto later = now + std::chrono::hours(10);
    CHECK(ledger.reap_timeouts(later) == 1);
    CHECK(ledger.counters().pending == 2);

    // the original worker's late Ok still completes the job (first wins)
    ledger.report_result("slow", ok_result(job));
    CHECK(ledger.counters().done == 1);
    // redispatched copy now reports; discarded
    ledger.register_worker("fast", 1.0);
    auto redo = ledger.dispatch_next("fast", later);
    REQUIRE(redo);
    CHECK(redo->sample_id == 1); // job 0 is Done, not re-issued
}

TEST_CASE("ledger: counters always sum to N, monotone done") {
    auto spec = planted_spec(4, 1);
    JobLedger ledger(small_batch(spec, 20), 3, {});
    ledger.register_worker("w", 1.0);
    int prev_done = 0;
    while (!ledger.complete()) {
        auto c = ledger.counters();
        CHECK(c.total() == 20);
        CHECK(c.done >= prev_done);
        prev_done = c.done;
        auto job = ledger.dispatch_next("w");
        REQUIRE(job);
        ledger.report_result("w", ok_result(*job));
    }
    CHECK(ledger.counters().done == 20);
}

TEST_CASE("ledger: concurrent dispatch never hands out the same job twice") {
    auto spec = planted_spec(4, 1);
    const int n = 500;
    JobLedger ledger(small_batch(spec, n), 13, {});
    const int n_workers = 8;
    std::vector<std::thread> threads;
    std::mutex mu;
    std::vector<std::int64_t> seen;
    for (int w = 0; w < n_workers; ++w) ledger.register_worker("w" + std::to_string(w), 1.0);
    for (int w = 0; w < n_workers; ++w) {
        threads.emplace_back([&, w] {
            std::string id = "w" + std::to_string(w);
            while (auto job = ledger.dispatch_next(id)) {
                {
                    std::lock_guard<std::mutex> lock(mu);
                    seen.push_back(job->sample_id);
                }
                ledger.report_result(id, ok_result(*job));
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ledger.complete());
    std::set<std::int64_t> unique(seen.begin(), seen.end());
    CHECK(seen.size() == n);      // each job dispatched exactly once
    CHECK(unique.size() == n);    // and no duplicates
}

TEST_CASE("wire protocol round-trips jobs and results") {
    SimulationJob job;
    job.job_id = "job-1-42";
    job.sample_id = 42;
    job.inputs = Vector(3);
    job.inputs << 1.5, -2.25, 3.0000000001;
    auto line = wire::job_msg(job);
    CHECK(wire::message_type(line) == "job");
    auto back = wire::parse_job(line);
    CHECK(back.job_id == job.job_id);
    CHECK(back.sample_id == 42);
    CHECK((back.inputs - job.inputs).cwiseAbs().maxCoeff() == 0.0);

    SimulationResult res;
    res.job_id = "job-1-42";
    res.series = Matrix(2, 3);
    res.series << 1, 2, 3, 4, 5, 6.000000000001;
    res.summaries = Vector(2);
    res.summaries << 3.0, 6.000000000001;
    res.duration_ms = 12.5;
    auto rline = wire::result_msg("w1", res);
    CHECK(wire::message_type(rline) == "result");
    CHECK(wire::field_string(rline, "worker_id") == "w1");
    auto rback = wire::parse_result(rline);
    CHECK(rback.status == SimStatus::Ok);
    CHECK((rback.series - res.series).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rback.summaries - res.summaries).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rback.duration_ms == 12.5);

    res.status = SimStatus::Failed;
    res.failure_reason = "boom";
    auto fback = wire::parse_result(wire::result_msg("w1", res));
    CHECK(fback.status == SimStatus::Failed);
    CHECK(fback.failure_reason == "boom");

    CHECK(wire::message_type(wire::no_work()) == "no_work");
    CHECK(wire::message_type(wire::ack()) == "ack");
    CHECK(wire::message_type(wire::shutdown()) == "shutdown");
    CHECK(wire::message_type(wire::heartbeat("w")) == "heartbeat");
    CHECK(wire::message_type(wire::register_msg("w", 2.0)) == "register");
    CHECK_THROWS_AS(wire::message_type("not json"), ParseError);
    CHECK_THROWS_AS(wire::message_type("{\"no_type\":1}"), ParseError);
}

TEST_CASE("line socket: newline framing over loopback") {
    Listener listener("127.0.0.1", 0);
    std::thread server([&] {
        auto conn = listener.accept_connection();
        REQUIRE(conn);
        auto line = conn->read_line();
        REQUIRE(line);
        conn->write_line("pong: " + *line);
    });
    auto client = LineSocket::connect_to("127.0.0.1", listener.port());
    client.write_line("ping");
    auto reply = client.read_line();
    REQUIRE(reply);
    CHECK(*reply == "pong: ping");
    server.join();
    listener.shutdown();
}

TEST_CASE("coordinator + in-process workers complete a batch, equal to serial") {
    auto spec = planted_spec(6, 2, 2, 77);
    auto sim = make_simulator(spec);
    auto samples = small_batch(spec, 60);

    LocalBackend serial(sim, 1);
    auto expected = serial.run_batch(samples, 99);

    Coordinator coordinator("127.0.0.1", 0, spec.distributed);
    std::atomic<bool> stop{false};
    std::vector<std::thread> workers;
    for (int w = 0; w < 3; ++w) {
        workers.emplace_back([&, w] {
            WorkerConfig wc;
            wc.port = coordinator.port();
            wc.worker_id = "test-worker-" + std::to_string(w);
            wc.idle_poll_ms = 5.0;
            run_worker_loop(wc, sim, &stop);
        });
    }
    auto results = coordinator.run_batch(samples, 99);
    coordinator.shutdown();
    for (auto& t : workers) t.join();

    REQUIRE(results.size() == expected.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        CHECK(results[i].job_id == expected[i].job_id);
        CHECK((results[i].series.array() == expected[i].series.array()).all());
        CHECK((results[i].summaries.array() == expected[i].summaries.array()).all());
    }
}

TEST_CASE("coordinator makes no progress without workers, resumes when one joins") {
    auto spec = planted_spec(4, 1, 1, 3);
    auto sim = make_simulator(spec);
    auto samples = small_batch(spec, 10);
    Coordinator coordinator("127.0.0.1", 0, spec.distributed);

    std::atomic<bool> done{false};
    std::thread batch([&] {
        auto results = coordinator.run_batch(samples, 1);
        CHECK(results.size() == 10);
        done = true;
    });
    std::this_thread::sleep_for(300ms);
    CHECK_FALSE(done.load());
    CHECK(coordinator.counters().done == 0);

    std::atomic<bool> stop{false};
    std::thread worker([&] {
        WorkerConfig wc;
        wc.port = coordinator.port();
        wc.worker_id = "late-joiner";
        wc.idle_poll_ms = 5.0;
        run_worker_loop(wc, sim, &stop);
    });
    batch.join();
    CHECK(done.load());
    coordinator.shutdown();
    worker.join();
}

TEST_CASE("terminal failures surface as SimFailure from run_batch") {
    auto spec = planted_spec(3, 1, 1, 4);
    spec.simulator_json = R"({"type":"exec","t_steps":3,"command":"false"})";
    auto sim = make_simulator(spec);
    auto samples = small_batch(spec, 4);
    DistributedConfig policy;
    policy.max_attempts = 2;
    Coordinator coordinator("127.0.0.1", 0, policy);
    std::atomic<bool> stop{false};
    std::thread worker([&] {
        WorkerConfig wc;
        wc.port = coordinator.port();
        wc.worker_id = "doomed";
        wc.idle_poll_ms = 5.0;
        run_worker_loop(wc, sim, &stop);
    });
    CHECK_THROWS_AS(coordinator.run_batch(samples, 1), SimFailure);
    coordinator.shutdown();
    worker.join();
}

TEST_CASE("worker with multiple slots drains the queue") {
    auto spec = planted_spec(5, 2, 2, 8, 2.0); // 2 ms latency
    auto sim = make_simulator(spec);
    auto samples = small_batch(spec, 40);
    Coordinator coordinator("127.0.0.1", 0, spec.distributed);
    std::atomic<bool> stop{false};
    std::thread worker([&] {
        WorkerConfig wc;
        wc.port = coordinator.port();
        wc.worker_id = "multi";
        wc.slots = 4;
        wc.idle_poll_ms = 5.0;
        run_worker_loop(wc, sim, &stop);
    });
    auto results = coordinator.run_batch(samples, 2);
    CHECK(results.size() == 40);
    coordinator.shutdown();
    worker.join();
}
