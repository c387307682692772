#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uqfarm/rsm.hpp"
#include "uqfarm/types.hpp"

namespace uqfarm {

enum class SensitivityMode {
    // A_j(i,n) = b_j[i] * X1(n,i) / sigma_i  (raw samples, literal form)
    RawOverSigma,
    // A_j(i,n) = b_j[i] * (X1(n,i) - colmean_i); scores come out as
    // |b_j[i]| * sigma_i * sqrt(2/pi), location-invariant (default)
    CenteredOverSigma,
};

// Per-metric matrices with rows = input variables, columns = samples.
struct SensitivityMatrix {
    std::vector<Matrix> per_metric; // each d x N
    SensitivityMode mode = SensitivityMode::CenteredOverSigma;
    std::vector<std::string> variable_names;
    std::vector<std::string> metric_names;
};

struct SensitivityScores {
    Matrix s;               // m x d, s(j,i) = mean |A_j(i,:)|
    Eigen::MatrixXi ranks;  // m x d, rank 1 = largest score, ties to lower index
    Vector totals;          // d, summed ranks across metrics
    std::vector<std::string> variable_names;
    std::vector<std::string> metric_names;
};

struct GapReport {
    std::vector<std::string> sorted_names; // ascending totals
    std::vector<double> sorted_totals;
    int drop_index = 0; // 1-based position of the max relative gap
    double max_gap_ratio = 0.0;
};

struct ReducedSet {
    std::vector<std::string> selected; // ascending total rank
    int k = 0;
    GapReport gap_report;
};

SensitivityMatrix sensitivity_matrix(const SurrogateModel& model, const SampleMatrix& X1,
                                     const Vector& sigmas, SensitivityMode mode);

SensitivityScores sensitivity_scores(const SensitivityMatrix& matrices);

// Streaming equivalent of sensitivity_matrix + sensitivity_scores that never
// holds more than one metric's matrix; same results.
SensitivityScores compute_sensitivity_scores(const SurrogateModel& model, const SampleMatrix& X1,
                                             const Vector& sigmas, SensitivityMode mode);

ReducedSet reduce_key_set(const SensitivityScores& scores, std::optional<int> k_override,
                          const ReductionConfig& config = {});

// One row per variable: name, per-metric score, per-metric rank, total, selected flag.
void write_sensitivity_csv(const std::string& path, const SensitivityScores& scores,
                           const ReducedSet& reduced);

} // namespace uqfarm
