#include "uqfarm/execution.hpp"

#include <atomic>
#include <thread>

#include "uqfarm/ledger.hpp"

namespace uqfarm {

LocalBackend::LocalBackend(SimulatorHandle simulator, int threads)
    : simulator_(std::move(simulator)), threads_(std::max(1, threads)) {}

std::vector<SimulationResult> LocalBackend::run_batch(const SampleMatrix& samples,
                                                      std::uint64_t batch_seed) {
    const auto n = samples.rows();
    std::vector<SimulationResult> results(static_cast<std::size_t>(n));
    std::atomic<Eigen::Index> next{0};
    auto work = [&] {
        for (Eigen::Index r = next.fetch_add(1); r < n; r = next.fetch_add(1)) {
            SimulationJob job;
            job.sample_id = r;
            job.job_id = JobLedger::job_id_for(batch_seed, r);
            job.inputs = samples.values.row(r).transpose();
            results[static_cast<std::size_t>(r)] = simulator_->simulate(job);
        }
    };
    if (threads_ == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads_; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& result : results)
        if (result.status != SimStatus::Ok)
            throw SimFailure("job " + result.job_id + " failed: " + result.failure_reason);
    return results;
}

std::string LocalBackend::description() const {
    return "local x" + std::to_string(threads_);
}

std::vector<SimulationResult> DistributedBackend::run_batch(const SampleMatrix& samples,
                                                            std::uint64_t batch_seed) {
    return coordinator_.run_batch(samples, batch_seed);
}

std::string DistributedBackend::description() const {
    return "coordinator:" + std::to_string(coordinator_.port());
}

ResponseSet to_response_set(const std::vector<SimulationResult>& results,
                            const std::vector<std::string>& metric_names) {
    if (results.empty()) throw EmptyInput("to_response_set: no results");
    const auto n = static_cast<Eigen::Index>(results.size());
    const auto m = results.front().series.rows();
    const auto t_steps = results.front().series.cols();
    if (static_cast<std::size_t>(m) != metric_names.size())
        throw ShapeMismatch("to_response_set: result has " + std::to_string(m) +
                            " metrics, expected " + std::to_string(metric_names.size()));

    ResponseSet out;
    out.metric_names = metric_names;
    out.summaries.resize(n, m);
    out.series.assign(static_cast<std::size_t>(m), Matrix(n, t_steps));
    out.sample_ids.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& result = results[static_cast<std::size_t>(r)];
        if (result.status != SimStatus::Ok)
            throw SimFailure("to_response_set: job " + result.job_id + " not Ok");
        if (result.series.rows() != m || result.series.cols() != t_steps)
            throw ShapeMismatch("to_response_set: inconsistent series shapes");
        out.summaries.row(r) = result.summaries.transpose();
        for (Eigen::Index j = 0; j < m; ++j)
            out.series[static_cast<std::size_t>(j)].row(r) = result.series.row(j);
        out.sample_ids.push_back(r);
    }
    return out;
}

} // namespace uqfarm
