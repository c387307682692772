#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "uqfarm/simulator.hpp"
#include "uqfarm/types.hpp"

namespace uqfarm {

enum class JobState { Pending, Dispatched, Done, Failed };

struct LedgerCounters {
    int pending = 0;
    int dispatched = 0;
    int done = 0;
    int failed = 0;
    int total() const { return pending + dispatched + done + failed; }
};

struct WorkerInfo {
    std::string worker_id;
    double speed = 1.0; // declared, informational only
    std::set<std::string> inflight;
    std::chrono::steady_clock::time_point last_heartbeat;
};

// State machine for one batch of simulation jobs. All transitions are
// serialized behind one mutex; a Done job's result is never replaced.
class JobLedger {
  public:
    using Clock = std::chrono::steady_clock;

    JobLedger(const SampleMatrix& samples, std::uint64_t study_seed,
              const DistributedConfig& policy);

    static std::string job_id_for(std::uint64_t study_seed, std::int64_t sample_id);

    void register_worker(const std::string& worker_id, double speed);
    void heartbeat(const std::string& worker_id);
    bool worker_known(const std::string& worker_id) const;

    // Moves the lowest-sample_id Pending job to Dispatched; nullopt when
    // nothing is pending. Throws UnknownWorker.
    std::optional<SimulationJob> dispatch_next(const std::string& worker_id,
                                               Clock::time_point now = Clock::now());

    // First Ok completion wins; duplicates and post-Done reports are
    // discarded. Failures re-queue until max_attempts. Throws UnknownJob.
    void report_result(const std::string& worker_id, const SimulationResult& result);

    // Re-queues every Dispatched job past its deadline; returns the count.
    int reap_timeouts(Clock::time_point now = Clock::now());

    bool complete() const;  // every job Done
    bool exhausted() const; // some job Failed terminally
    LedgerCounters counters() const;
    std::size_t n_jobs() const { return order_.size(); }
    double current_timeout_s() const;

    // Ok results ordered by sample_id; only valid once complete().
    std::vector<SimulationResult> results() const;

  private:
    struct Record {
        SimulationJob job;
        JobState state = JobState::Pending;
        std::string worker;
        Clock::time_point deadline{};
        int attempts = 0;
        SimulationResult result;
    };

    double timeout_s_locked() const;
    void requeue_locked(Record& rec);

    mutable std::mutex mu_;
    DistributedConfig policy_;
    double initial_timeout_s_ = 60.0;
    std::unordered_map<std::string, Record> jobs_; // by job_id
    std::vector<std::string> order_;               // job ids by sample_id
    std::set<std::int64_t> pending_;               // FIFO by sample_id
    std::uint64_t study_seed_;
    std::unordered_map<std::string, WorkerInfo> workers_;
    std::vector<double> durations_ms_;
    LedgerCounters counters_;
};

} // namespace uqfarm
