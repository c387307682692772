#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uqfarm/types.hpp"

namespace uqfarm {

struct BandStats {
    double p_lo = 0.0;
    double mean = 0.0;
    double p_hi = 0.0;
};

// Per-metric percentile bands over the flexion cycle plus peak statistics
// over the scalar summaries.
struct Envelope {
    std::vector<std::string> metric_names;
    double p_lo_pct = 5.0;
    double p_hi_pct = 95.0;
    Eigen::Index n_samples = 0;
    std::vector<Matrix> bands; // per metric: T x 3 (p_lo, mean, p_hi)
    std::vector<BandStats> peak_stats;
};

struct ConvergenceCheckpoint {
    int n = 0;
    double mean = 0.0;
    double p_lo = 0.0;
    double p_hi = 0.0;
};

struct ConvergenceTrace {
    std::vector<ConvergenceCheckpoint> checkpoints;
    std::optional<int> converged_at;
    int window = 0;
    double rel_tol = 0.0;
};

struct EnvelopeDiff {
    std::vector<std::string> metric_names;
    std::vector<double> d_p_lo;  // max over t of |p_lo1 - p_lo2|
    std::vector<double> d_mean;
    std::vector<double> d_p_hi;
    std::vector<double> headline; // max of the three, per metric
};

// Sorted-order linear interpolation at rank p/100 * (N-1), zero-based.
double percentile(const Vector& values, double p);

// Bands at each timestep; mean over all samples (untrimmed by default).
Envelope pointwise_envelope(const ResponseSet& responses, double p_lo, double p_hi,
                            bool trimmed_mean = false);

// Running mean/percentiles of one metric's summaries, checkpointed every
// `window` samples. Converged at the first checkpoint where all three values
// moved by less than rel_tol (relative, floored near zero) versus the
// previous checkpoint, for two consecutive checkpoints.
ConvergenceTrace convergence_trace(const Vector& summaries, double p_lo, double p_hi, int window,
                                   double rel_tol);

EnvelopeDiff compare_envelopes(const Envelope& a, const Envelope& b);

void write_envelope_csvs(const std::string& dir, const Envelope& envelope);
void write_convergence_csv(const std::string& path, const ConvergenceTrace& trace);
void write_diff_report_csv(const std::string& path, const EnvelopeDiff& diff);

} // namespace uqfarm
