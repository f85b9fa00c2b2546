#include "imrl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imrl/errors.hpp"

namespace imrl::harness {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw InvalidInput("cannot write: " + path.string());
    f << text;
}

std::vector<std::string> read_lines_checked(const std::filesystem::path& path,
                                            const std::string& schema) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot read: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.empty() || lines[0] != "# schema: " + schema) {
        throw InvalidInput(path.string() + ": unknown or missing schema line (want " + schema + ")");
    }
    return lines;
}

} // namespace

std::string metrics_to_csv(std::span<const MetricsRecord> rows) {
    std::ostringstream out;
    out << "# schema: " << kMetricsSchema << "\n";
    out << "variant,seed,episode,env_steps,ctr,episode_return,threshold_T,buffer_size,"
           "augmented_count,j_q,j_v,j_pi,j_p,alpha_T\n";
    for (const MetricsRecord& r : rows) {
        out << r.variant << ',' << r.seed << ',' << r.episode << ',' << r.env_steps << ','
            << fmt(r.ctr) << ',' << fmt(r.episode_return) << ',' << fmt(r.threshold) << ','
            << r.buffer_size << ',' << r.augmented << ',' << fmt(r.j_q) << ',' << fmt(r.j_v) << ','
            << fmt(r.j_pi) << ',' << fmt(r.j_p) << ',' << fmt(r.alpha) << '\n';
    }
    return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> rows) {
    write_text(path, metrics_to_csv(rows));
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines_checked(path, kMetricsSchema);
    std::vector<MetricsRecord> rows;
    for (std::size_t i = 2; i < lines.size(); ++i) { // skip schema + header
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 14) throw InvalidInput(path.string() + ": malformed row " + std::to_string(i));
        MetricsRecord r;
        r.variant = f[0];
        r.seed = std::stoull(f[1]);
        r.episode = std::stol(f[2]);
        r.env_steps = std::stol(f[3]);
        r.ctr = std::stod(f[4]);
        r.episode_return = std::stod(f[5]);
        r.threshold = std::stod(f[6]);
        r.buffer_size = std::stoull(f[7]);
        r.augmented = std::stoull(f[8]);
        r.j_q = std::stod(f[9]);
        r.j_v = std::stod(f[10]);
        r.j_pi = std::stod(f[11]);
        r.j_p = std::stod(f[12]);
        r.alpha = std::stod(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows) {
    std::ostringstream out;
    out << "# schema: " << kAblationSchema << "\n";
    out << "variant,seed,final_ctr,user_digest\n";
    for (const AblationRow& r : rows) {
        char digest[17];
        std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(r.user_digest));
        out << r.variant << ',' << r.seed << ',' << fmt(r.final_ctr) << ',' << digest << '\n';
    }
    write_text(path, out.str());
}

std::vector<AblationRow> read_ablation_csv(const std::filesystem::path& path) {
    const std::vector<std::string> lines = read_lines_checked(path, kAblationSchema);
    std::vector<AblationRow> rows;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 4) throw InvalidInput(path.string() + ": malformed row " + std::to_string(i));
        AblationRow r;
        r.variant = f[0];
        r.seed = std::stoull(f[1]);
        r.final_ctr = std::stod(f[2]);
        r.user_digest = std::stoull(f[3], nullptr, 16);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const env::TraceRow> rows) {
    std::ostringstream out;
    out << "step,item_id,category,click,true_p\n";
    for (const env::TraceRow& r : rows) {
        out << r.step << ',' << r.item_id << ',' << r.category << ',' << r.click << ','
            << fmt(r.true_p) << '\n';
    }
    write_text(path, out.str());
}

void write_audit_csv(const std::filesystem::path& path, std::span<const causal::AuditRow> rows) {
    std::ostringstream out;
    out << "episode,trigger_r,d,partner_index,oracle_valid\n";
    for (const causal::AuditRow& r : rows) {
        out << r.episode << ',' << fmt(r.trigger_r) << ',' << r.component << ',' << r.partner_index
            << ',' << (r.oracle_valid ? 1 : 0) << '\n';
    }
    write_text(path, out.str());
}

void write_correlation_csv(const std::filesystem::path& path,
                           const empower::CorrelationReport& report) {
    const std::vector<double> exact_ranks = [&] {
        std::vector<double> v;
        for (const auto& r : report.rows) v.push_back(r.exact_capacity);
        return empower::rank_with_ties(v);
    }();
    const std::vector<double> g_ranks = [&] {
        std::vector<double> v;
        for (const auto& r : report.rows) v.push_back(r.mean_g);
        return empower::rank_with_ties(v);
    }();
    std::ostringstream out;
    out << "state,exact_capacity,mean_g,exact_rank,g_rank\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        out << r.state << ',' << fmt(r.exact_capacity) << ',' << fmt(r.mean_g) << ','
            << fmt(exact_ranks[i]) << ',' << fmt(g_ranks[i]) << '\n';
    }
    write_text(path, out.str());
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double final_window_ctr(std::span<const MetricsRecord> rows, double window) {
    if (rows.empty()) throw InvalidInput("final_window_ctr: no rows");
    const std::size_t n = rows.size();
    const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(window * n));
    double acc = 0.0;
    for (std::size_t i = n - take; i < n; ++i) acc += rows[i].ctr;
    return acc / static_cast<double>(take);
}

long episodes_to_fraction_of_final(std::span<const MetricsRecord> rows, double fraction) {
    if (rows.empty()) throw InvalidInput("episodes_to_fraction_of_final: no rows");
    const double target = fraction * final_window_ctr(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        double mean = 0.0;
        for (std::size_t k = lo; k <= i; ++k) mean += rows[k].ctr;
        mean /= static_cast<double>(i - lo + 1);
        if (mean >= target) return rows[i].episode;
    }
    return rows.back().episode;
}

} // namespace imrl::harness
