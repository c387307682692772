#pragma once

#include <string>

#include "uqfarm/coordinator.hpp"
#include "uqfarm/simulator.hpp"
#include "uqfarm/types.hpp"

namespace uqfarm {

// Runs one batch of simulations and returns responses in sample order.
class ExecutionBackend {
  public:
    virtual ~ExecutionBackend() = default;
    virtual std::vector<SimulationResult> run_batch(const SampleMatrix& samples,
                                                    std::uint64_t batch_seed) = 0;
    virtual std::string description() const = 0;
};

class LocalBackend : public ExecutionBackend {
  public:
    LocalBackend(SimulatorHandle simulator, int threads = 1);
    std::vector<SimulationResult> run_batch(const SampleMatrix& samples,
                                            std::uint64_t batch_seed) override;
    std::string description() const override;

  private:
    SimulatorHandle simulator_;
    int threads_;
};

class DistributedBackend : public ExecutionBackend {
  public:
    explicit DistributedBackend(Coordinator& coordinator) : coordinator_(coordinator) {}
    std::vector<SimulationResult> run_batch(const SampleMatrix& samples,
                                            std::uint64_t batch_seed) override;
    std::string description() const override;

  private:
    Coordinator& coordinator_;
};

// Assembles per-metric series and summaries from Ok results, in order.
ResponseSet to_response_set(const std::vector<SimulationResult>& results,
                            const std::vector<std::string>& metric_names);

} // namespace uqfarm
