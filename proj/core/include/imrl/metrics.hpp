#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imrl/causal.hpp"
#include "imrl/empowerment.hpp"
#include "imrl/env.hpp"

namespace imrl::harness {

inline constexpr const char* kMetricsSchema = "imrl.metrics.v1";
inline constexpr const char* kAblationSchema = "imrl.ablation.v1";

/// One evaluation row of a training run.
struct MetricsRecord {
    std::string variant;
    std::uint64_t seed = 0;
    long episode = 0;   // completed training episodes at evaluation time
    long env_steps = 0;
    double ctr = 0.0;   // clicks / steps over the evaluation episodes
    double episode_return = 0.0;
    double threshold = 0.0;
    std::size_t buffer_size = 0;
    std::size_t augmented = 0;
    double j_q = 0.0, j_v = 0.0, j_pi = 0.0, j_p = 0.0;
    double alpha = 0.0;
};

std::string metrics_to_csv(std::span<const MetricsRecord> rows);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> rows);
/// Rejects files whose schema line does not match kMetricsSchema.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double final_ctr = 0.0;          // mean CTR over the last tenth of evaluations
    std::uint64_t user_digest = 0;   // hash of the evaluation user population
};

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);
std::vector<AblationRow> read_ablation_csv(const std::filesystem::path& path);

void write_trace_csv(const std::filesystem::path& path, std::span<const env::TraceRow> rows);
void write_audit_csv(const std::filesystem::path& path, std::span<const causal::AuditRow> rows);
void write_correlation_csv(const std::filesystem::path& path,
                           const empower::CorrelationReport& report);

// Curve statistics used by the experiment analyses.
double median(std::vector<double> values);
/// Mean CTR over the trailing `window` fraction of evaluation rows.
double final_window_ctr(std::span<const MetricsRecord> rows, double window = 0.1);
/// First episode whose 3-evaluation running-mean CTR reaches `fraction` of
/// the final-window CTR; returns the last row's episode when never reached.
long episodes_to_fraction_of_final(std::span<const MetricsRecord> rows, double fraction = 0.9);

} // namespace imrl::harness
