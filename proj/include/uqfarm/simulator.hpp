#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uqfarm/types.hpp"

namespace uqfarm {

struct SimulationJob {
    std::string job_id;
    std::int64_t sample_id = 0;
    Vector inputs;
};

enum class SimStatus { Ok, Failed };

struct SimulationResult {
    std::string job_id;
    Matrix series; // m x T
    Vector summaries;
    double duration_ms = 0.0;
    SimStatus status = SimStatus::Ok;
    std::string failure_reason;
};

// The black box every study runs against. Handles are immutable and may be
// called concurrently from many workers.
class Simulator {
  public:
    virtual ~Simulator() = default;

    Eigen::Index dims() const { return d_; }
    Eigen::Index n_metrics() const { return static_cast<Eigen::Index>(summary_kinds_.size()); }
    Eigen::Index n_steps() const { return t_steps_; }
    double job_latency_ms() const { return job_latency_ms_; }

    SimulationResult simulate(const SimulationJob& job) const;

  protected:
    Simulator(Eigen::Index d, std::vector<SummaryKind> summary_kinds, Eigen::Index t_steps,
              double job_latency_ms)
        : d_(d), summary_kinds_(std::move(summary_kinds)), t_steps_(t_steps),
          job_latency_ms_(job_latency_ms) {}

    // Returns the m x T series; throws SimFailure on model failure.
    virtual Matrix run(const Vector& x) const = 0;

  private:
    Eigen::Index d_;
    std::vector<SummaryKind> summary_kinds_;
    Eigen::Index t_steps_;
    double job_latency_ms_;
};

using SimulatorHandle = std::shared_ptr<const Simulator>;

// Affine-plus-quadratic stand-in for the expensive FE solver:
//   y_j(x, t) = (b0_j + sum_i C_ji (x_i - mu_i) + sum_i Q_ji (x_i - mu_i)^2) * g(t)
// with g = 0 during the settle phase, then a monotone smoothstep to 1.
struct SyntheticModelSpec {
    Vector baseline;    // m
    Matrix coefficients; // m x d
    Matrix quad_diag;    // m x d
    Vector means;        // d (deviations are taken about these)
    std::vector<Eigen::Index> key_set;
    Eigen::Index t_steps = 101;
    Eigen::Index settle_steps = 10;
    double dominance_factor = 5.0;

    double profile(Eigen::Index t) const;
    // Checks the planted-dominance invariant on the coefficient matrix.
    void validate() const;
};

Vector synthetic_response(const SyntheticModelSpec& model, const Vector& x, Eigen::Index t);

class SyntheticSimulator : public Simulator {
  public:
    SyntheticSimulator(SyntheticModelSpec model, std::vector<SummaryKind> summary_kinds,
                       double job_latency_ms);

    const SyntheticModelSpec& model() const { return model_; }

  protected:
    Matrix run(const Vector& x) const override;

  private:
    SyntheticModelSpec model_;
};

// Deterministic coefficient generation from a seed, respecting the
// dominance invariant against the study's sigmas.
struct SyntheticGenConfig {
    std::uint64_t seed = 0;
    std::vector<Eigen::Index> key_set; // empty -> pick key_count at random
    int key_count = 19;
    double coeff_scale_key = 0.01;  // relative to |baseline|
    double coeff_scale_minor = 1.0; // multiplier inside the dominance cap
    double quad_scale = 0.0;
    Eigen::Index t_steps = 101;
    Eigen::Index settle_steps = 10;
    Vector baseline; // empty -> all 100
};

SyntheticModelSpec generate_synthetic_model(const StudySpec& spec, const SyntheticGenConfig& cfg);

// Runs `command` through the shell per job: inputs as one CSV row on stdin,
// result read as m x T CSV (one line per metric) from stdout.
class ExecSimulator : public Simulator {
  public:
    ExecSimulator(std::string command, Eigen::Index d, std::vector<SummaryKind> summary_kinds,
                  Eigen::Index t_steps, double job_latency_ms);

  protected:
    Matrix run(const Vector& x) const override;

  private:
    std::string command_;
};

// Builds the simulator from spec.simulator_json (default: synthetic, seeded
// from the study seed).
SimulatorHandle make_simulator(const StudySpec& spec);

} // namespace uqfarm
