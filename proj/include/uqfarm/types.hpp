#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uqfarm/error.hpp"

namespace uqfarm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One stochastic model input. Units are documentation only.
struct InputVariable {
    std::string name;
    double mean = 0.0;
    double std_dev = 0.0;
    std::string group;
};

// How a per-sample time series is collapsed to one scalar per metric.
enum class SummaryKind {
    PeakAbsSigned, // signed value of the maximum absolute excursion (default)
    Max,
    Min,
    Final,
};

struct OutputMetric {
    std::string name;
    SummaryKind summary = SummaryKind::PeakAbsSigned;
};

double apply_summary(SummaryKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& series);

struct ConvergenceConfig {
    int window = 100;
    double rel_tol = 0.01;
};

struct ReductionConfig {
    std::optional<int> k_override;
    // Search window for the score-drop detector, as fractions of d.
    double gap_lo_frac = 0.125;
    double gap_hi_frac = 0.5;
};

struct DistributedConfig {
    int max_attempts = 3;
    double timeout_floor_s = 1.0;
    double timeout_factor = 10.0; // deadline = factor x observed median job duration
};

enum class SampleOrigin { MonteCarlo, RegularDesign, Surrogate };

// N x d realizations of the study inputs, columns in StudySpec order.
struct SampleMatrix {
    Matrix values; // N rows, d columns
    std::vector<std::string> variable_names;
    SampleOrigin origin = SampleOrigin::MonteCarlo;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

// Per-sample simulator outputs: per-metric time series plus scalar summaries.
struct ResponseSet {
    // series[j] is N x T for metric j.
    std::vector<Matrix> series;
    Matrix summaries; // N x m
    std::vector<std::string> metric_names;
    std::vector<std::int64_t> sample_ids;

    Eigen::Index n_samples() const { return summaries.rows(); }
    Eigen::Index n_metrics() const { return summaries.cols(); }
    Eigen::Index n_steps() const { return series.empty() ? 0 : series.front().cols(); }
};

struct SimulatorConfigJson; // defined in config.hpp (raw JSON block)

struct StudySpec {
    std::vector<InputVariable> variables;
    std::vector<OutputMetric> metrics;
    int n_mc = 800;
    int n_rsm = 100;
    int n_surrogate = 1000; // surrogate propagation sample count
    std::vector<int> rsm_variants;
    double p_lo = 5.0;
    double p_hi = 95.0;
    ConvergenceConfig convergence;
    ReductionConfig reduction;
    DistributedConfig distributed;
    std::uint64_t seed = 0;
    std::string simulator_json; // simulator block, verbatim JSON text

    std::size_t dims() const { return variables.size(); }
    std::size_t n_metric() const { return metrics.size(); }
    void validate() const;
    Vector means() const;
    Vector sigmas() const;
};

// Succeeds iff column count and names match spec.variables, else ShapeMismatch.
void validate_alignment(const SampleMatrix& samples, const StudySpec& spec);

} // namespace uqfarm
