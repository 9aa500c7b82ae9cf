#pragma once

#include <string>
#include <vector>

#include "benchhedge/hedging.hpp"
#include "benchhedge/models.hpp"
#include "benchhedge/path_bundle.hpp"

namespace benchhedge {

enum class DriftTest { SupermartingaleOneSided, MartingaleTwoSided };

// Per-node drift statistics of a channel's one-step increments across paths.
// One-sided mode passes while mean increments stay <= 0 within 4 standard
// errors; two-sided mode requires |z| <= 4 everywhere.
struct DriftReport {
    std::string channel;
    DriftTest mode = DriftTest::MartingaleTwoSided;
    std::vector<double> mean_increment;  // per step
    std::vector<double> stderr_increment;
    std::vector<double> z_score;
    double max_z = 0.0;  // max signed z (one-sided) or max |z| (two-sided)
    double cumulative_drift = 0.0;
    bool pass = false;
};

DriftReport drift_report(const PathBundle& bundle, const std::string& channel, DriftTest mode,
                         double z_threshold = 4.0);

inline DriftReport supermartingale_check(const PathBundle& bundle, const std::string& channel) {
    return drift_report(bundle, channel, DriftTest::SupermartingaleOneSided);
}

// Monte Carlo estimate of the terminal value of the candidate density ratio
// Lambda_T = (Z_T/Z_0)^(1 - dim/2); in the stylized model (dim 4) its mean is
// 1 - exp(-f(0) Z_0) < 1, the martingale defect.
struct LocalMartingaleReport {
    double estimate = 0.0;
    double stderr_mean = 0.0;
    double expected = 0.0;   // closed-form E[Lambda_T]
    double defect = 0.0;     // 1 - estimate
    double z_vs_expected = 0.0;
    double z_vs_one = 0.0;   // how many SEs below 1 (strictness evidence)
};

LocalMartingaleReport strict_local_martingale_check(const PathBundle& bundle,
                                                    const StylizedMmmParams& params);

// Max absolute residual, over paths and steps, of the discretized
// numeraire-change identity
//   dC_hat = s_hat_0_- dC_bar + d[C_bar, s_hat_0],
// with left-limit weights and increment-product covariation.
double cost_numeraire_relation(const std::vector<double>& c_bar_flat,
                               const std::vector<double>& s_hat_0_flat,
                               const std::vector<double>& c_hat_flat, std::size_t n_paths,
                               std::size_t n_nodes);

// Covariation z-tests between a cost path and a set of martingale-part
// increments; each entry reports the cross-path mean of the realized
// covariation sum and its z-score.
struct CovariationEntry {
    std::string channel;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct OrthogonalityReport {
    std::vector<CovariationEntry> entries;
    bool pass = false;
};

OrthogonalityReport orthogonality_preservation(
    const std::vector<double>& cost_flat, std::size_t n_paths, std::size_t n_nodes,
    const std::vector<std::pair<std::string, const std::vector<double>*>>& martingale_increments,
    double z_threshold = 4.0);

// JSON lines for the report types (used by the CLI verify task).
std::string drift_report_json(const DriftReport& report);
std::string local_martingale_report_json(const LocalMartingaleReport& report);
std::string orthogonality_report_json(const OrthogonalityReport& report);

}  // namespace benchhedge
