#include "uqfarm/worker.hpp"

#include <chrono>
#include <thread>
#include <vector>

#include <unistd.h>

#include "uqfarm/net.hpp"
#include "uqfarm/protocol.hpp"

namespace uqfarm {

namespace {

std::string default_worker_id() {
    char host[256] = "worker";
    gethostname(host, sizeof(host) - 1);
    return std::string(host) + "-" + std::to_string(getpid());
}

LineSocket connect_with_backoff(const WorkerConfig& config, std::atomic<bool>* stop) {
    double backoff_ms = 100.0;
    for (int attempt = 1;; ++attempt) {
        if (stop && *stop) throw ConnectionLost("worker stopped while connecting");
        try {
            return LineSocket::connect_to(config.host, config.port);
        } catch (const ConnectionLost&) {
            if (attempt >= config.max_connect_attempts) throw;
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(backoff_ms));
            backoff_ms = std::min(backoff_ms * 1.5, 5000.0);
        }
    }
}

std::string request(LineSocket& socket, const std::string& msg) {
    socket.write_line(msg);
    auto reply = socket.read_line();
    if (!reply) throw ConnectionLost("coordinator closed the connection");
    return *reply;
}

// One pull loop; returns when the coordinator sends shutdown.
void slot_loop(const WorkerConfig& config, const std::string& worker_id,
               const SimulatorHandle& simulator, std::atomic<bool>* stop) {
    LineSocket socket = connect_with_backoff(config, stop);
    request(socket, wire::register_msg(worker_id, config.speed));

    auto last_heartbeat = std::chrono::steady_clock::now();
    while (true) {
        if (stop && *stop) return;
        std::string reply;
        try {
            reply = request(socket, wire::job_request(worker_id));
        } catch (const ConnectionLost&) {
            socket = connect_with_backoff(config, stop);
            request(socket, wire::register_msg(worker_id, config.speed));
            continue;
        }
        const auto type = wire::message_type(reply);
        if (type == "shutdown") return;
        if (type == "job") {
            auto job = wire::parse_job(reply);
            auto result = simulator->simulate(job);
            try {
                request(socket, wire::result_msg(worker_id, result)); // ack
            } catch (const ConnectionLost&) {
                // Result lost with the connection; the coordinator's timeout
                // re-queues the job. Reconnect and carry on.
                socket = connect_with_backoff(config, stop);
                request(socket, wire::register_msg(worker_id, config.speed));
            }
            continue;
        }
        // no_work: idle-poll, with a periodic heartbeat.
        auto now = std::chrono::steady_clock::now();
        if (now - last_heartbeat > std::chrono::seconds(2)) {
            request(socket, wire::heartbeat(worker_id));
            last_heartbeat = now;
        }
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(config.idle_poll_ms));
    }
}

} // namespace

void run_worker_loop(const WorkerConfig& config, SimulatorHandle simulator,
                     std::atomic<bool>* stop) {
    const std::string worker_id =
        config.worker_id.empty() ? default_worker_id() : config.worker_id;
    const int slots = std::max(1, config.slots);
    if (slots == 1) {
        slot_loop(config, worker_id, simulator, stop);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (int s = 0; s < slots; ++s)
        threads.emplace_back([&, s] {
            try {
                slot_loop(config, worker_id + "#" + std::to_string(s), simulator, stop);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace uqfarm
