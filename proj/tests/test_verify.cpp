#include "doctest.h"

#include <cmath>

#include "benchhedge/hedging.hpp"
#include "benchhedge/models.hpp"
#include "benchhedge/pricing.hpp"
#include "benchhedge/stats.hpp"
#include "benchhedge/verify.hpp"
#include "helpers.hpp"

using namespace benchhedge;

namespace {

// Two-leg bookkeeping of the same physical strategy under both numeraires.
// The cash leg sits in the numeraire portfolio itself: benchmarked it is the
// constant 1 and contributes no gains, discounted it is the channel
// discounted_np; the bond leg is P_hat / P_bar. Holdings are sized so the
// portfolio value matches the hedged claim at the left nodes.
struct TwoNumeraireCosts {
    std::vector<double> c_hat;   // benchmarked cost, per path per node
    std::vector<double> c_bar;   // discounted cost
    std::vector<double> s_hat_0; // benchmarked savings account
    std::size_t n_paths = 0;
    std::size_t n_nodes = 0;
};

TwoNumeraireCosts build_two_numeraire_costs(const PathBundle& bundle, const Strategy& eta_only) {
    const std::size_t np = bundle.n_paths();
    const std::size_t nn = bundle.n_nodes();
    TwoNumeraireCosts out;
    out.n_paths = np;
    out.n_nodes = nn;
    out.s_hat_0 = bundle.channel("s_hat_0").data;

    // benchmarked cost: only the bond leg generates gains
    out.c_hat = cost_process(bundle, "s_hat_1", testutil::bond_leg(eta_only)).cost;

    // discounted view of the same holdings
    PathBundle discounted(bundle.grid(), np);
    auto& np_ch = discounted.add("discounted_np", ChannelKind::Level);
    np_ch.data = bundle.channel("discounted_np").data;
    auto& pbar = discounted.add("P_bar", ChannelKind::Level);
    std::vector<double> v_bar(np * nn);
    for (std::size_t k = 0; k < np * nn; ++k) {
        pbar.data[k] = bundle.channel("P_hat").data[k] / bundle.channel("s_hat_0").data[k];
        v_bar[k] = bundle.channel("s_hat_1").data[k] / bundle.channel("s_hat_0").data[k];
    }
    Strategy full_bar;
    full_bar.instruments = {"discounted_np", "P_bar"};
    full_bar.holdings.assign(2, std::vector<double>(np * (nn - 1), 0.0));
    full_bar.n_paths = np;
    full_bar.n_steps = nn - 1;
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t i = 0; i + 1 < nn; ++i) {
            const double eta = eta_only.at(0, p, i);
            full_bar.holdings[1][p * (nn - 1) + i] = eta;
            // numeraire-portfolio units: benchmarked value minus the bond leg
            full_bar.holdings[0][p * (nn - 1) + i] =
                bundle.at("s_hat_1", p, i) - eta * bundle.at("P_hat", p, i);
        }
    out.c_bar = cost_process_values(discounted, v_bar, full_bar).cost;
    return out;
}

constexpr double kHedgeMaturity = 2.0;  // keeps the factor away from the origin

PathBundle stylized_hedge_bundle(std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                 Strategy* strategy_out) {
    const auto params = testutil::stylized_fixture();
    const TimeGrid g = make_time_grid(0.0, kHedgeMaturity, n_steps);
    PathBundle bundle = simulate_stylized_mmm(params, g, n_paths, seed);
    add_theta_from_model(bundle, {1.0, 0.0});
    add_orthogonal_increments(bundle, seed);
    const std::array<std::array<double, 2>, 2> vols{{{0.25, 0.05}, {0.05, 0.3}}};
    simulate_primary_accounts(bundle, vols, {1.0, 1.0});
    add_bond_channel(bundle, params, kHedgeMaturity);
    if (strategy_out)
        *strategy_out = stylized_gkw_strategy(bundle, 1, vols[0], params, kHedgeMaturity);
    return bundle;
}

}  // namespace

TEST_CASE("drift reports: supermartingale, martingale, and a counterexample") {
    const auto params = testutil::stylized_fixture();
    const TimeGrid g = make_time_grid(0.0, 10.0, 32);
    PathBundle bundle = simulate_stylized_mmm(params, g, 20000, 1618);
    add_bond_channel(bundle, params, 10.0);

    SUBCASE("benchmarked savings account drifts down by exactly the bond gap") {
        const DriftReport report = supermartingale_check(bundle, "s_hat_0");
        CHECK(report.pass);
        CHECK(report.cumulative_drift < 0.0);
        const auto terminal = testutil::terminal(bundle, "s_hat_0");
        const double gap = -std::exp(-params.f(0.0, 10.0) * params.z0) / params.z0;
        CHECK(std::fabs(report.cumulative_drift - gap) <=
              4.0 * mean_stats(terminal).stderr_mean);
    }
    SUBCASE("the bond is a two-sided martingale") {
        const DriftReport report = drift_report(bundle, "P_hat", DriftTest::MartingaleTwoSided);
        CHECK(report.pass);
    }
    SUBCASE("an injected positive drift is flagged") {
        PathBundle drifting(g, 2000);
        auto& ch = drifting.add("X", ChannelKind::Level);
        const double dt = g.dt();
        for (std::size_t p = 0; p < 2000; ++p) {
            RngStream s(5, p);
            double x = 0.0;
            for (std::size_t i = 0; i < drifting.n_nodes(); ++i) {
                ch.data[p * drifting.n_nodes() + i] = x;
                x += 0.01 * dt + 0.001 * std::sqrt(dt) * s.normal();
            }
        }
        CHECK_FALSE(supermartingale_check(drifting, "X").pass);
        CHECK_FALSE(drift_report(drifting, "X", DriftTest::MartingaleTwoSided).pass);
    }
    SUBCASE("json rendering carries verdicts") {
        const std::string j = drift_report_json(supermartingale_check(bundle, "s_hat_0"));
        CHECK(j.find("supermartingale_drift") != std::string::npos);
        CHECK(j.find("verdict") != std::string::npos);
    }
}

TEST_CASE("strict local martingale defect") {
    const auto params = testutil::stylized_fixture();

    SUBCASE("stylized model loses the closed-form mass by T = 10") {
        const TimeGrid g = make_time_grid(0.0, 10.0, 16);
        const PathBundle bundle = simulate_stylized_mmm(params, g, 100000, 2718);
        const LocalMartingaleReport report = strict_local_martingale_check(bundle, params);
        CHECK(report.expected ==
              doctest::Approx(1.0 - std::exp(-params.f(0.0, 10.0))).epsilon(1e-12));
        CHECK(std::fabs(report.z_vs_expected) <= 3.0);
        CHECK(report.z_vs_one >= 5.0);
    }
    SUBCASE("short horizons lose nothing") {
        const TimeGrid g = make_time_grid(0.0, 0.05, 4);
        const PathBundle bundle = simulate_stylized_mmm(params, g, 20000, 2719);
        const LocalMartingaleReport report = strict_local_martingale_check(bundle, params);
        CHECK(std::fabs(report.z_vs_expected) <= 3.0);
        CHECK(report.expected == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::fabs(report.z_vs_one) <= 4.0);  // no detectable mass loss
    }
    SUBCASE("a true martingale ratio has no defect") {
        const auto gparams = testutil::gbm_fixture();
        const TimeGrid g = make_time_grid(0.0, 10.0, 16);
        const PathBundle bundle = simulate_gbm_const_theta(gparams, g, 50000, 2720);
        std::vector<double> ratio(bundle.n_paths());
        for (std::size_t p = 0; p < bundle.n_paths(); ++p)
            ratio[p] = bundle.at("s_hat_0", p, bundle.n_nodes() - 1) / gparams.s_hat_0_0;
        CHECK(std::fabs(testutil::zscore(mean_stats(ratio), 1.0)) <= 3.0);
    }
}

TEST_CASE("numeraire-change identity for cost processes") {
    SUBCASE("self-financing strategies have constant costs and zero residual") {
        const std::size_t np = 10, nn = 5;
        std::vector<double> constant(np * nn, 2.0), s0(np * nn, 0.7);
        CHECK(cost_numeraire_relation(constant, s0, constant, np, nn) == 0.0);
    }
    SUBCASE("the full two-leg bookkeeping satisfies the identity to rounding") {
        for (const std::size_t n_steps : {16u, 64u}) {
            Strategy strategy;
            const PathBundle bundle = stylized_hedge_bundle(500, n_steps, 33, &strategy);
            const TwoNumeraireCosts costs = build_two_numeraire_costs(bundle, strategy);
            const double residual = cost_numeraire_relation(costs.c_bar, costs.s_hat_0,
                                                            costs.c_hat, costs.n_paths,
                                                            costs.n_nodes);
            CHECK(residual <= 1e-16 + 10.0 / static_cast<double>(n_steps) * 1e-9);
            CHECK(residual <= 1e-10);
        }
    }
    SUBCASE("a bookkeeping error is flagged well above rounding") {
        Strategy strategy;
        const PathBundle bundle = stylized_hedge_bundle(200, 16, 34, &strategy);
        TwoNumeraireCosts costs = build_two_numeraire_costs(bundle, strategy);
        costs.c_hat[3 * costs.n_nodes + 7] += 1e-3;
        const double residual = cost_numeraire_relation(costs.c_bar, costs.s_hat_0, costs.c_hat,
                                                        costs.n_paths, costs.n_nodes);
        CHECK(residual >= 5e-4);
    }
    SUBCASE("misaligned inputs are rejected") {
        std::vector<double> a(10), b(10), c(9);
        CHECK_THROWS_AS(cost_numeraire_relation(a, b, c, 2, 5), std::invalid_argument);
    }
}

TEST_CASE("orthogonality is preserved under the numeraire change") {
    Strategy strategy;
    const PathBundle bundle = stylized_hedge_bundle(20000, 64, 35, &strategy);
    const TwoNumeraireCosts costs = build_two_numeraire_costs(bundle, strategy);
    const std::size_t np = costs.n_paths, nn = costs.n_nodes;
    const auto params = testutil::stylized_fixture();
    const TimeGrid& g = bundle.grid();

    // martingale-part increments of the traded channels in each numeraire
    std::vector<double> mart_bond_hat(np * nn, 0.0);     // psi dW
    std::vector<double> mart_savings_hat(np * nn, 0.0);  // d s_hat_0 (driftless)
    std::vector<double> mart_np_bar(np * nn, 0.0);       // sqrt(alpha Z) dW
    std::vector<double> mart_bond_bar(np * nn, 0.0);     // diffusion part of P_bar
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t i = 0; i + 1 < nn; ++i) {
            const double t = g.node(i);
            const double s0 = bundle.at("s_hat_0", p, i);
            const double psi = psi_integrand_stylized(t, s0, params, kHedgeMaturity);
            const double dw = bundle.at("dW", p, i + 1);
            mart_bond_hat[p * nn + i + 1] = psi * dw;
            mart_savings_hat[p * nn + i + 1] =
                bundle.at("s_hat_0", p, i + 1) - bundle.at("s_hat_0", p, i);
            const double z = 1.0 / s0;
            mart_np_bar[p * nn + i + 1] = std::sqrt(params.alpha(t) * z) * dw;
            // P_bar = P_hat * Z: diffusion coefficient P_hat sqrt(alpha Z) + Z psi
            const double coef =
                bundle.at("P_hat", p, i) * std::sqrt(params.alpha(t) * z) + z * psi;
            mart_bond_bar[p * nn + i + 1] = coef * dw;
        }

    SUBCASE("hedge costs are orthogonal to the traded martingale parts") {
        const OrthogonalityReport hat = orthogonality_preservation(
            costs.c_hat, np, nn,
            {{"P_hat", &mart_bond_hat}, {"s_hat_0", &mart_savings_hat}});
        CHECK(hat.pass);
        const OrthogonalityReport bar = orthogonality_preservation(
            costs.c_bar, np, nn,
            {{"discounted_np", &mart_np_bar}, {"P_bar", &mart_bond_bar}});
        CHECK(bar.pass);
    }
    SUBCASE("the same strategy's cost is a centered martingale under both numeraires") {
        for (const std::vector<double>* cost : {&costs.c_hat, &costs.c_bar}) {
            PathBundle wrap(bundle.grid(), np);
            wrap.add("cost", ChannelKind::Level).data = *cost;
            CHECK(drift_report(wrap, "cost", DriftTest::MartingaleTwoSided).pass);
        }
    }
    SUBCASE("a constant cost is trivially orthogonal") {
        const std::vector<double> flat(np * nn, 1.5);
        const OrthogonalityReport report =
            orthogonality_preservation(flat, np, nn, {{"P_hat", &mart_bond_hat}});
        CHECK(report.pass);
        CHECK(report.entries[0].mean == 0.0);
    }
    SUBCASE("a driver-built cost violates the hypothesis and is reported") {
        std::vector<double> w_cost(np * nn, 0.0);
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t i = 0; i + 1 < nn; ++i)
                w_cost[p * nn + i + 1] = w_cost[p * nn + i] + bundle.at("dW", p, i + 1);
        const OrthogonalityReport report =
            orthogonality_preservation(w_cost, np, nn, {{"P_hat", &mart_bond_hat}});
        CHECK_FALSE(report.pass);
        const std::string j = orthogonality_report_json(report);
        CHECK(j.find("\"verdict\":\"fail\"") != std::string::npos);
    }
}
