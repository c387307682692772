#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <thread>
#include <vector>

#include "uqfarm/ledger.hpp"
#include "uqfarm/net.hpp"

namespace uqfarm {

// Owns the job ledger and serves the wire protocol. Workers stay connected
// across batches; between batches job requests get no_work, and shutdown()
// answers further requests with a shutdown message.
class Coordinator {
  public:
    Coordinator(const std::string& host, int port, DistributedConfig policy);
    ~Coordinator();

    int port() const { return listener_.port(); }

    // Blocks until every job is Done (returns results by sample_id) or some
    // job fails terminally (throws SimFailure).
    std::vector<SimulationResult> run_batch(const SampleMatrix& samples, std::uint64_t seed);

    // Counters of the active batch (zeros when idle).
    LedgerCounters counters() const;

    // Answer subsequent job requests with shutdown and stop serving.
    void shutdown();

  private:
    void accept_loop();
    void serve_connection(LineSocket socket);
    void reaper_loop();

    Listener listener_;
    DistributedConfig policy_;
    std::shared_ptr<JobLedger> ledger_; // guarded by mu_
    mutable std::mutex mu_;
    std::condition_variable batch_cv_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::thread reaper_thread_;
    std::vector<std::thread> conn_threads_;
    std::mutex conn_mu_;
};

} // namespace uqfarm
