#pragma once

#include <atomic>
#include <string>

#include "uqfarm/simulator.hpp"

namespace uqfarm {

struct WorkerConfig {
    std::string host = "127.0.0.1";
    int port = 0;
    std::string worker_id; // empty -> host-pid derived
    int slots = 1;         // concurrent jobs
    double speed = 1.0;    // declared, informational
    int max_connect_attempts = 30;
    double idle_poll_ms = 50.0;
};

// register -> pull/simulate/report loop until the coordinator says shutdown.
// Reconnects with backoff on connection loss; throws ConnectionLost once the
// retry budget is spent. `stop` (optional) requests an early clean exit.
void run_worker_loop(const WorkerConfig& config, SimulatorHandle simulator,
                     std::atomic<bool>* stop = nullptr);

} // namespace uqfarm
