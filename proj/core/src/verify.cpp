#include "benchhedge/verify.hpp"

#include <cmath>
#include <sstream>

#include "benchhedge/pricing.hpp"
#include "benchhedge/stats.hpp"

#include "json.hpp"

namespace benchhedge {

DriftReport drift_report(const PathBundle& bundle, const std::string& channel, DriftTest mode,
                         double z_threshold) {
    const Channel& ch = bundle.channel(channel);
    const std::size_t nn = bundle.n_nodes();
    const std::size_t np = bundle.n_paths();

    DriftReport report;
    report.channel = channel;
    report.mode = mode;
    report.mean_increment.resize(nn - 1);
    report.stderr_increment.resize(nn - 1);
    report.z_score.resize(nn - 1);

    std::vector<double> inc(np);
    double max_stat = -1e300;
    for (std::size_t i = 0; i + 1 < nn; ++i) {
        for (std::size_t p = 0; p < np; ++p) {
            const double* row = ch.data.data() + p * nn;
            inc[p] = ch.kind == ChannelKind::Increment ? row[i + 1] : row[i + 1] - row[i];
        }
        const MeanStats ms = mean_stats(inc);
        report.mean_increment[i] = ms.mean;
        report.stderr_increment[i] = ms.stderr_mean;
        const double z = ms.stderr_mean > 0.0 ? ms.mean / ms.stderr_mean : 0.0;
        report.z_score[i] = z;
        report.cumulative_drift += ms.mean;
        max_stat = std::max(max_stat, mode == DriftTest::SupermartingaleOneSided ? z : std::fabs(z));
    }
    report.max_z = max_stat;
    report.pass = max_stat <= z_threshold;
    return report;
}

LocalMartingaleReport strict_local_martingale_check(const PathBundle& bundle,
                                                    const StylizedMmmParams& params) {
    const Channel& z = bundle.channel("Z");
    const std::size_t nn = bundle.n_nodes();
    std::vector<double> lambda_T(bundle.n_paths());
    for (std::size_t p = 0; p < bundle.n_paths(); ++p)
        lambda_T[p] = params.z0 / z.data[p * nn + nn - 1];

    LocalMartingaleReport report;
    const MeanStats ms = mean_stats(lambda_T);
    report.estimate = ms.mean;
    report.stderr_mean = ms.stderr_mean;
    report.expected =
        1.0 - std::exp(-params.f(bundle.grid().t0, bundle.grid().T) * params.z0);
    report.defect = 1.0 - ms.mean;
    report.z_vs_expected = ms.stderr_mean > 0.0 ? (ms.mean - report.expected) / ms.stderr_mean : 0.0;
    report.z_vs_one = ms.stderr_mean > 0.0 ? (1.0 - ms.mean) / ms.stderr_mean : 0.0;
    return report;
}

double cost_numeraire_relation(const std::vector<double>& c_bar_flat,
                               const std::vector<double>& s_hat_0_flat,
                               const std::vector<double>& c_hat_flat, std::size_t n_paths,
                               std::size_t n_nodes) {
    if (c_bar_flat.size() != n_paths * n_nodes || s_hat_0_flat.size() != n_paths * n_nodes ||
        c_hat_flat.size() != n_paths * n_nodes)
        throw std::invalid_argument("cost_numeraire_relation: misaligned inputs");
    double worst = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double* cb = c_bar_flat.data() + p * n_nodes;
        const double* s0 = s_hat_0_flat.data() + p * n_nodes;
        const double* chat = c_hat_flat.data() + p * n_nodes;
        for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
            const double d_bar = cb[i + 1] - cb[i];
            const double d_hat = chat[i + 1] - chat[i];
            const double d_s0 = s0[i + 1] - s0[i];
            const double residual = d_hat - s0[i] * d_bar - d_bar * d_s0;
            worst = std::max(worst, std::fabs(residual));
        }
    }
    return worst;
}

OrthogonalityReport orthogonality_preservation(
    const std::vector<double>& cost_flat, std::size_t n_paths, std::size_t n_nodes,
    const std::vector<std::pair<std::string, const std::vector<double>*>>& martingale_increments,
    double z_threshold) {
    OrthogonalityReport report;
    report.pass = true;
    std::vector<double> cov(n_paths);
    for (const auto& [name, inc_flat] : martingale_increments) {
        if (inc_flat->size() != n_paths * n_nodes)
            throw std::invalid_argument("orthogonality_preservation: misaligned increments");
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double* c = cost_flat.data() + p * n_nodes;
            const double* m = inc_flat->data() + p * n_nodes;
            double acc = 0.0;
            // increments are stored in slots 1..n_nodes-1
            for (std::size_t i = 0; i + 1 < n_nodes; ++i) acc += (c[i + 1] - c[i]) * m[i + 1];
            cov[p] = acc;
        }
        const MeanStats ms = mean_stats(cov);
        CovariationEntry entry;
        entry.channel = name;
        entry.mean = ms.mean;
        entry.stderr_mean = ms.stderr_mean;
        entry.z = ms.stderr_mean > 0.0 ? ms.mean / ms.stderr_mean : 0.0;
        entry.pass = std::fabs(entry.z) <= z_threshold;
        report.pass = report.pass && entry.pass;
        report.entries.push_back(entry);
    }
    return report;
}

std::string drift_report_json(const DriftReport& report) {
    nlohmann::json j;
    j["test"] = report.mode == DriftTest::SupermartingaleOneSided ? "supermartingale_drift"
                                                                  : "martingale_drift";
    j["channel"] = report.channel;
    j["statistic"] = report.max_z;
    j["threshold"] = 4.0;
    j["cumulative_drift"] = report.cumulative_drift;
    j["verdict"] = report.pass ? "pass" : "fail";
    return j.dump();
}

std::string local_martingale_report_json(const LocalMartingaleReport& report) {
    nlohmann::json j;
    j["test"] = "strict_local_martingale_defect";
    j["estimate"] = report.estimate;
    j["stderr"] = report.stderr_mean;
    j["expected"] = report.expected;
    j["statistic"] = report.z_vs_expected;
    j["threshold"] = 3.0;
    j["z_below_one"] = report.z_vs_one;
    j["verdict"] = (std::fabs(report.z_vs_expected) <= 3.0 && report.z_vs_one >= 5.0) ? "pass" : "fail";
    return j.dump();
}

std::string orthogonality_report_json(const OrthogonalityReport& report) {
    nlohmann::json j;
    j["test"] = "orthogonality_preservation";
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"channel", e.channel},
                           {"statistic", e.z},
                           {"threshold", 4.0},
                           {"verdict", e.pass ? "pass" : "fail"}});
    }
    j["entries"] = entries;
    j["verdict"] = report.pass ? "pass" : "fail";
    return j.dump();
}

}  // namespace benchhedge
