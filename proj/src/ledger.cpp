#include "uqfarm/ledger.hpp"

#include <algorithm>

namespace uqfarm {

JobLedger::JobLedger(const SampleMatrix& samples, std::uint64_t study_seed,
                     const DistributedConfig& policy)
    : policy_(policy), study_seed_(study_seed) {
    if (samples.rows() < 1) throw ValidationError("submit_batch: empty sample matrix");
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        Record rec;
        rec.job.sample_id = r;
        rec.job.job_id = job_id_for(study_seed, r);
        rec.job.inputs = samples.values.row(r).transpose();
        order_.push_back(rec.job.job_id);
        pending_.insert(r);
        jobs_.emplace(rec.job.job_id, std::move(rec));
    }
    counters_.pending = static_cast<int>(order_.size());
}

std::string JobLedger::job_id_for(std::uint64_t study_seed, std::int64_t sample_id) {
    return "job-" + std::to_string(study_seed) + "-" + std::to_string(sample_id);
}

void JobLedger::register_worker(const std::string& worker_id, double speed) {
    std::lock_guard lock(mu_);
    auto& info = workers_[worker_id];
    info.worker_id = worker_id;
    info.speed = speed;
    info.last_heartbeat = Clock::now();
}

void JobLedger::heartbeat(const std::string& worker_id) {
    std::lock_guard lock(mu_);
    auto it = workers_.find(worker_id);
    if (it == workers_.end()) throw UnknownWorker("heartbeat from unregistered worker '" + worker_id + "'");
    it->second.last_heartbeat = Clock::now();
}

bool JobLedger::worker_known(const std::string& worker_id) const {
    std::lock_guard lock(mu_);
    return workers_.count(worker_id) > 0;
}

double JobLedger::timeout_s_locked() const {
    if (durations_ms_.empty()) return std::max(initial_timeout_s_, policy_.timeout_floor_s);
    std::vector<double> sorted = durations_ms_;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double median_s = sorted[sorted.size() / 2] / 1000.0;
    return std::max(policy_.timeout_floor_s, policy_.timeout_factor * median_s);
}

double JobLedger::current_timeout_s() const {
    std::lock_guard lock(mu_);
    return timeout_s_locked();
}

std::optional<SimulationJob> JobLedger::dispatch_next(const std::string& worker_id,
                                                      Clock::time_point now) {
    std::lock_guard lock(mu_);
    auto wit = workers_.find(worker_id);
    if (wit == workers_.end())
        throw UnknownWorker("dispatch request from unregistered worker '" + worker_id + "'");
    wit->second.last_heartbeat = now;
    if (pending_.empty()) return std::nullopt;

    auto sample_id = *pending_.begin();
    pending_.erase(pending_.begin());
    auto& rec = jobs_.at(job_id_for(study_seed_, sample_id));
    rec.state = JobState::Dispatched;
    rec.worker = worker_id;
    rec.deadline = now + std::chrono::duration_cast<Clock::duration>(
                             std::chrono::duration<double>(timeout_s_locked()));
    wit->second.inflight.insert(rec.job.job_id);
    --counters_.pending;
    ++counters_.dispatched;
    return rec.job;
}

void JobLedger::requeue_locked(Record& rec) {
    if (!rec.worker.empty()) {
        auto wit = workers_.find(rec.worker);
        if (wit != workers_.end()) wit->second.inflight.erase(rec.job.job_id);
        rec.worker.clear();
    }
    ++rec.attempts;
    --counters_.dispatched;
    if (rec.attempts >= policy_.max_attempts) {
        rec.state = JobState::Failed;
        ++counters_.failed;
    } else {
        rec.state = JobState::Pending;
        pending_.insert(rec.job.sample_id);
        ++counters_.pending;
    }
}

void JobLedger::report_result(const std::string& worker_id, const SimulationResult& result) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(result.job_id);
    if (it == jobs_.end()) throw UnknownJob("result for unknown job '" + result.job_id + "'");
    auto& rec = it->second;

    if (rec.state == JobState::Done || rec.state == JobState::Failed) return; // late duplicate

    auto clear_inflight = [&] {
        if (!rec.worker.empty()) {
            auto wit = workers_.find(rec.worker);
            if (wit != workers_.end()) wit->second.inflight.erase(rec.job.job_id);
            rec.worker.clear();
        }
    };

    if (result.status == SimStatus::Ok) {
        // Accepted from Dispatched or from Pending (timed out and re-queued
        // but not yet re-dispatched): first completion wins.
        if (rec.state == JobState::Pending) {
            pending_.erase(rec.job.sample_id);
            --counters_.pending;
        } else {
            --counters_.dispatched;
        }
        clear_inflight();
        rec.state = JobState::Done;
        rec.result = result;
        ++counters_.done;
        durations_ms_.push_back(result.duration_ms);
        (void)worker_id;
    } else {
        if (rec.state != JobState::Dispatched) return; // stale failure for a re-queued job
        requeue_locked(rec);
    }
}

int JobLedger::reap_timeouts(Clock::time_point now) {
    std::lock_guard lock(mu_);
    int reaped = 0;
    for (auto& [id, rec] : jobs_) {
        if (rec.state == JobState::Dispatched && now >= rec.deadline) {
            requeue_locked(rec);
            ++reaped;
        }
    }
    return reaped;
}

bool JobLedger::complete() const {
    std::lock_guard lock(mu_);
    return counters_.done == static_cast<int>(order_.size());
}

bool JobLedger::exhausted() const {
    std::lock_guard lock(mu_);
    return counters_.failed > 0;
}

LedgerCounters JobLedger::counters() const {
    std::lock_guard lock(mu_);
    return counters_;
}

std::vector<SimulationResult> JobLedger::results() const {
    std::lock_guard lock(mu_);
    std::vector<SimulationResult> out;
    out.reserve(order_.size());
    for (const auto& id : order_) {
        const auto& rec = jobs_.at(id);
        if (rec.state != JobState::Done)
            throw Error("results requested before job '" + id + "' completed");
        out.push_back(rec.result);
    }
    return out;
}

} // namespace uqfarm
