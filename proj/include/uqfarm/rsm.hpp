#pragma once

#include <string>
#include <vector>

#include "uqfarm/types.hpp"

namespace uqfarm {

enum class Basis {
    LinearIntercept,     // 1, x_1 .. x_d
    LinearPlusQuadDiag,  // 1, x_1 .. x_d, x_1^2 .. x_d^2
};

struct TrainingStats {
    Eigen::Index n_train = 0;
    Vector residual_rms;   // per metric
    double condition = 0.0; // singular-value ratio of the design matrix
};

struct SurrogateModel {
    Matrix coefficients; // m x p, intercept first
    Basis basis = Basis::LinearIntercept;
    std::vector<std::string> variable_names;
    std::vector<std::string> metric_names;
    TrainingStats training_stats;
    // Optional per-timestep coefficients (one T x p matrix per metric),
    // populated by fit_series for time-resolved propagation.
    std::vector<Matrix> series_coefficients;

    Eigen::Index dims() const { return static_cast<Eigen::Index>(variable_names.size()); }
    Eigen::Index n_terms() const { return coefficients.cols(); }
    // Slope coefficient of variable i for metric j (intercept excluded).
    double slope(Eigen::Index metric, Eigen::Index var) const {
        return coefficients(metric, 1 + var);
    }
};

std::vector<std::string> basis_term_names(const std::vector<std::string>& variable_names,
                                          Basis basis);

// Design matrix: rows = samples, columns = basis terms.
Matrix build_basis(const SampleMatrix& X, Basis basis);

// Least squares per metric via SVD; throws RankDeficient naming the
// dependent basis columns when the design loses rank.
SurrogateModel fit_rse(const SampleMatrix& X, const Matrix& summaries,
                       const std::vector<std::string>& metric_names, Basis basis);

// Adds per-timestep coefficients fitted against the full response series.
void fit_series(SurrogateModel& model, const SampleMatrix& X, const ResponseSet& responses);

// Summary predictions, one row per X1 sample, one column per metric.
Matrix predict(const SurrogateModel& model, const SampleMatrix& X1);

// Full surrogate propagation: series from the per-timestep coefficients
// (requires fit_series), summaries from the summary coefficients.
ResponseSet predict_responses(const SurrogateModel& model, const SampleMatrix& X1);

// Coefficient export: one row per metric, columns intercept then terms.
void write_surrogate_csv(const std::string& path, const SurrogateModel& model);
// Inverse of write_surrogate_csv (summary coefficients only).
SurrogateModel read_surrogate_csv(const std::string& path);

} // namespace uqfarm
