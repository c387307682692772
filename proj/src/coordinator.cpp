#include "uqfarm/coordinator.hpp"

#include "uqfarm/protocol.hpp"

namespace uqfarm {

Coordinator::Coordinator(const std::string& host, int port, DistributedConfig policy)
    : listener_(host, port), policy_(policy) {
    accept_thread_ = std::thread([this] { accept_loop(); });
    reaper_thread_ = std::thread([this] { reaper_loop(); });
}

Coordinator::~Coordinator() {
    shutdown();
    listener_.shutdown();
    if (accept_thread_.joinable()) accept_thread_.join();
    if (reaper_thread_.joinable()) reaper_thread_.join();
    std::lock_guard lock(conn_mu_);
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
}

void Coordinator::accept_loop() {
    while (!stopping_) {
        auto socket = listener_.accept_connection();
        if (!socket) break;
        std::lock_guard lock(conn_mu_);
        conn_threads_.emplace_back(
            [this, s = std::move(*socket)]() mutable { serve_connection(std::move(s)); });
    }
}

void Coordinator::reaper_loop() {
    while (!stopping_) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        std::shared_ptr<JobLedger> ledger;
        {
            std::lock_guard lock(mu_);
            ledger = ledger_;
        }
        if (ledger && ledger->reap_timeouts() > 0) {
            std::lock_guard lock(mu_);
            batch_cv_.notify_all();
        }
    }
}

void Coordinator::serve_connection(LineSocket socket) {
    std::string worker_id;
    try {
        while (true) {
            auto line = socket.read_line();
            if (!line) return; // worker hung up
            const auto type = wire::message_type(*line);

            std::shared_ptr<JobLedger> ledger;
            {
                std::lock_guard lock(mu_);
                ledger = ledger_;
            }

            if (type == "register") {
                worker_id = wire::field_string(*line, "worker_id");
                if (ledger) ledger->register_worker(worker_id, wire::field_double(*line, "speed"));
                socket.write_line(wire::ack());
            } else if (type == "heartbeat") {
                if (ledger) {
                    try {
                        ledger->heartbeat(wire::field_string(*line, "worker_id"));
                    } catch (const UnknownWorker&) {
                        // Heartbeat raced a batch swap; the next register fixes it.
                    }
                }
                socket.write_line(wire::ack());
            } else if (type == "job_request") {
                if (stopping_) {
                    socket.write_line(wire::shutdown());
                    return;
                }
                const auto id = wire::field_string(*line, "worker_id");
                std::optional<SimulationJob> job;
                if (ledger) {
                    if (!ledger->worker_known(id)) ledger->register_worker(id, 1.0);
                    job = ledger->dispatch_next(id);
                }
                socket.write_line(job ? wire::job_msg(*job) : wire::no_work());
            } else if (type == "result") {
                if (ledger) {
                    try {
                        ledger->report_result(wire::field_string(*line, "worker_id"),
                                              wire::parse_result(*line));
                    } catch (const UnknownJob&) {
                        // Result for a previous batch; acknowledge and drop.
                    }
                    std::lock_guard lock(mu_);
                    batch_cv_.notify_all();
                }
                socket.write_line(wire::ack());
            } else {
                // Forward compatibility: acknowledge unknown message types.
                socket.write_line(wire::ack());
            }
        }
    } catch (const ConnectionLost&) {
        // Worker vanished mid-message; the reaper re-queues its jobs.
    } catch (const ParseError&) {
        // Garbage on the wire; drop the connection.
    }
}

std::vector<SimulationResult> Coordinator::run_batch(const SampleMatrix& samples,
                                                     std::uint64_t seed) {
    auto ledger = std::make_shared<JobLedger>(samples, seed, policy_);
    {
        std::lock_guard lock(mu_);
        ledger_ = ledger;
    }
    std::unique_lock lock(mu_);
    batch_cv_.wait(lock, [&] { return ledger->complete() || ledger->exhausted() || stopping_; });
    ledger_.reset();
    lock.unlock();
    if (ledger->complete()) return ledger->results();
    throw SimFailure("batch aborted: " + std::to_string(ledger->counters().failed) +
                     " job(s) failed terminally");
}

LedgerCounters Coordinator::counters() const {
    std::lock_guard lock(mu_);
    return ledger_ ? ledger_->counters() : LedgerCounters{};
}

void Coordinator::shutdown() {
    stopping_ = true;
    std::lock_guard lock(mu_);
    batch_cv_.notify_all();
}

} // namespace uqfarm
