#include "uqfarm/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uqfarm/csv.hpp"

namespace uqfarm {

namespace {
constexpr double kRelFloor = 1e-9;

double percentile_sorted(const std::vector<double>& sorted, double p) {
    const auto n = sorted.size();
    if (n == 1) return sorted[0];
    double rank = p / 100.0 * static_cast<double>(n - 1);
    auto lo = static_cast<std::size_t>(rank);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

bool quiet(double cur, double prev, double rel_tol) {
    return std::abs(cur - prev) < rel_tol * std::max(std::abs(prev), kRelFloor);
}
} // namespace

double percentile(const Vector& values, double p) {
    if (values.size() == 0) throw EmptyInput("percentile: empty input");
    if (!values.allFinite()) throw EmptyInput("percentile: non-finite input");
    if (!(p >= 0.0 && p <= 100.0)) throw IndexOutOfRange("percentile: p outside [0,100]");
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, p);
}

Envelope pointwise_envelope(const ResponseSet& responses, double p_lo, double p_hi,
                            bool trimmed_mean) {
    const auto n = responses.n_samples();
    if (n < 2) throw EmptyInput("pointwise_envelope: need at least 2 samples");
    if (!(p_lo < p_hi)) throw ValidationError("pointwise_envelope: p_lo must be < p_hi");

    Envelope env;
    env.metric_names = responses.metric_names;
    env.p_lo_pct = p_lo;
    env.p_hi_pct = p_hi;
    env.n_samples = n;

    std::vector<double> column(static_cast<std::size_t>(n));
    for (const auto& series : responses.series) {
        const auto t_steps = series.cols();
        Matrix band(t_steps, 3);
        for (Eigen::Index t = 0; t < t_steps; ++t) {
            for (Eigen::Index r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = series(r, t);
            std::sort(column.begin(), column.end());
            const double lo = percentile_sorted(column, p_lo);
            const double hi = percentile_sorted(column, p_hi);
            double mean;
            if (trimmed_mean) {
                double sum = 0.0;
                std::size_t count = 0;
                for (double v : column)
                    if (v >= lo && v <= hi) {
                        sum += v;
                        ++count;
                    }
                mean = count ? sum / static_cast<double>(count) : 0.0;
            } else {
                mean = series.col(t).mean();
            }
            band(t, 0) = lo;
            band(t, 1) = mean;
            band(t, 2) = hi;
        }
        env.bands.push_back(std::move(band));
    }

    for (Eigen::Index j = 0; j < responses.n_metrics(); ++j) {
        BandStats stats;
        stats.p_lo = percentile(responses.summaries.col(j), p_lo);
        stats.p_hi = percentile(responses.summaries.col(j), p_hi);
        stats.mean = responses.summaries.col(j).mean();
        env.peak_stats.push_back(stats);
    }
    return env;
}

ConvergenceTrace convergence_trace(const Vector& summaries, double p_lo, double p_hi, int window,
                                   double rel_tol) {
    if (window < 2) throw ValidationError("convergence_trace: window must be >= 2");
    if (!(rel_tol > 0.0)) throw ValidationError("convergence_trace: rel_tol must be > 0");

    ConvergenceTrace trace;
    trace.window = window;
    trace.rel_tol = rel_tol;

    std::vector<double> sorted;
    sorted.reserve(static_cast<std::size_t>(summaries.size()));
    double running_sum = 0.0;
    for (int n = window; n <= summaries.size(); n += window) {
        for (int r = n - window; r < n; ++r) {
            double v = summaries[r];
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), v), v);
            running_sum += v;
        }
        ConvergenceCheckpoint cp;
        cp.n = n;
        cp.mean = running_sum / n;
        cp.p_lo = percentile_sorted(sorted, p_lo);
        cp.p_hi = percentile_sorted(sorted, p_hi);
        trace.checkpoints.push_back(cp);
    }

    // First checkpoint that is quiet versus its predecessor and stays quiet
    // through the next one as well.
    for (std::size_t k = 1; k + 1 < trace.checkpoints.size() && !trace.converged_at; ++k) {
        const auto& prev = trace.checkpoints[k - 1];
        const auto& cur = trace.checkpoints[k];
        const auto& next = trace.checkpoints[k + 1];
        bool q1 = quiet(cur.mean, prev.mean, rel_tol) && quiet(cur.p_lo, prev.p_lo, rel_tol) &&
                  quiet(cur.p_hi, prev.p_hi, rel_tol);
        bool q2 = quiet(next.mean, cur.mean, rel_tol) && quiet(next.p_lo, cur.p_lo, rel_tol) &&
                  quiet(next.p_hi, cur.p_hi, rel_tol);
        if (q1 && q2) trace.converged_at = cur.n;
    }
    return trace;
}

EnvelopeDiff compare_envelopes(const Envelope& a, const Envelope& b) {
    if (a.metric_names != b.metric_names)
        throw ShapeMismatch("compare_envelopes: metric lists differ");
    if (a.bands.size() != b.bands.size())
        throw ShapeMismatch("compare_envelopes: band counts differ");

    EnvelopeDiff diff;
    diff.metric_names = a.metric_names;
    for (std::size_t j = 0; j < a.bands.size(); ++j) {
        const auto& ba = a.bands[j];
        const auto& bb = b.bands[j];
        if (ba.rows() != bb.rows())
            throw ShapeMismatch("compare_envelopes: timestep counts differ for metric '" +
                                a.metric_names[j] + "'");
        double d_lo = (ba.col(0) - bb.col(0)).cwiseAbs().maxCoeff();
        double d_mean = (ba.col(1) - bb.col(1)).cwiseAbs().maxCoeff();
        double d_hi = (ba.col(2) - bb.col(2)).cwiseAbs().maxCoeff();
        diff.d_p_lo.push_back(d_lo);
        diff.d_mean.push_back(d_mean);
        diff.d_p_hi.push_back(d_hi);
        diff.headline.push_back(std::max({d_lo, d_mean, d_hi}));
    }
    return diff;
}

void write_envelope_csvs(const std::string& dir, const Envelope& envelope) {
    for (std::size_t j = 0; j < envelope.bands.size(); ++j) {
        const auto& band = envelope.bands[j];
        std::ofstream out(dir + "/envelope_" + envelope.metric_names[j] + ".csv");
        if (!out) throw Error("cannot open envelope CSV in " + dir);
        out << "t,p_lo,mean,p_hi\n";
        for (Eigen::Index t = 0; t < band.rows(); ++t)
            out << t << ',' << format_double(band(t, 0)) << ',' << format_double(band(t, 1))
                << ',' << format_double(band(t, 2)) << '\n';
    }
}

void write_convergence_csv(const std::string& path, const ConvergenceTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "n,mean,p_lo,p_hi,converged\n";
    for (const auto& cp : trace.checkpoints)
        out << cp.n << ',' << format_double(cp.mean) << ',' << format_double(cp.p_lo) << ','
            << format_double(cp.p_hi) << ','
            << (trace.converged_at && cp.n >= *trace.converged_at ? 1 : 0) << '\n';
}

void write_diff_report_csv(const std::string& path, const EnvelopeDiff& diff) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "metric,d_p_lo,d_mean,d_p_hi,headline\n";
    for (std::size_t j = 0; j < diff.metric_names.size(); ++j)
        out << diff.metric_names[j] << ',' << format_double(diff.d_p_lo[j]) << ','
            << format_double(diff.d_mean[j]) << ',' << format_double(diff.d_p_hi[j]) << ','
            << format_double(diff.headline[j]) << '\n';
}

} // namespace uqfarm
