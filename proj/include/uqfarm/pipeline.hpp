#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uqfarm/envelope.hpp"
#include "uqfarm/execution.hpp"
#include "uqfarm/rsm.hpp"
#include "uqfarm/sensitivity.hpp"
#include "uqfarm/types.hpp"

namespace uqfarm {

struct AnalysisRecord {
    std::string label;
    bool present = false;
    int n_sims = 0;
    std::string dir; // relative to the study output directory
    std::optional<int> converged_at;
};

struct DiffRecord {
    std::string a;
    std::string b;
    EnvelopeDiff diff;
};

// The four-analysis study result: two full-set analyses (MCST + RSM), the
// key-variable reduction, and two reduced-set analyses.
struct StudyReport {
    std::vector<AnalysisRecord> analyses;
    ReducedSet reduced;
    std::vector<DiffRecord> diffs;
    double serial_equivalent_ms = 0.0;
    double wall_ms = 0.0;
    std::string backend;
    std::string failed_stage; // empty on success
};

// In-memory stage artifacts, for callers that want more than the CSVs.
struct StudyOutputs {
    std::optional<Envelope> mcst_full;
    std::optional<Envelope> rsm_full;
    std::optional<Envelope> mcst_reduced;
    std::vector<std::pair<int, Envelope>> rsm_reduced; // (n_rsm, envelope)
    std::optional<ConvergenceTrace> trace_full;
    std::optional<SurrogateModel> surrogate_full;
    ReducedSet reduced;
};

// Runs the four analyses in order, writing stage artifacts incrementally
// under out_dir and report.json at the end (also on stage failure, with
// failed_stage set, before rethrowing).
StudyReport run_study(const StudySpec& spec, ExecutionBackend& backend,
                      const std::string& out_dir, StudyOutputs* outputs = nullptr);

std::string report_to_json(const StudyReport& report);

// Sensitivity scores from a fitted surrogate over propagation samples,
// silently excluding zero-sigma variables (they cannot rank).
SensitivityScores surrogate_sensitivity(const SurrogateModel& model, const SampleMatrix& X1,
                                        const Vector& sigmas, SensitivityMode mode);

// Column subset of a sample matrix, preserving row order.
SampleMatrix select_columns(const SampleMatrix& samples, const std::vector<Eigen::Index>& cols);

} // namespace uqfarm
