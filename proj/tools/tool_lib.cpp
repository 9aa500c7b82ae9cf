#include "tool_lib.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "benchhedge/discrete_lab.hpp"
#include "benchhedge/hedging.hpp"
#include "benchhedge/models.hpp"
#include "benchhedge/parallel.hpp"
#include "benchhedge/pricing.hpp"
#include "benchhedge/stats.hpp"
#include "benchhedge/stochastic_core.hpp"
#include "benchhedge/verify.hpp"

namespace benchhedge::tool {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    json config;
    try {
        in >> config;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    validate_config(config);
    return config;
}

namespace {

void require_keys(const json& section, const std::string& name,
                  const std::set<std::string>& required, const std::set<std::string>& optional) {
    if (!section.is_object()) throw ConfigError("section '" + name + "' must be an object");
    for (const auto& [key, value] : section.items()) {
        (void)value;
        if (!required.count(key) && !optional.count(key))
            throw ConfigError("unknown key '" + key + "' in section '" + name + "'");
    }
    for (const auto& key : required)
        if (!section.contains(key))
            throw ConfigError("missing key '" + key + "' in section '" + name + "'");
}

double num(const json& j, const std::string& context) {
    if (!j.is_number()) throw ConfigError("'" + context + "' must be a number");
    return j.get<double>();
}

StylizedMmmParams stylized_params(const json& model) {
    StylizedMmmParams p;
    p.alpha0 = num(model.at("alpha0"), "model.alpha0");
    p.beta = num(model.at("beta"), "model.beta");
    p.r = model.contains("r") ? num(model.at("r"), "model.r") : 0.0;
    p.z0 = num(model.at("z0"), "model.z0");
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return p;
}

std::function<double(double, double)> coefficient_fn(const json& j, const std::string& context) {
    require_keys(j, context, {"type"}, {"speed", "level", "coef"});
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") return [c = num(j.at("coef"), context)](double, double) { return c; };
    if (type == "mean_reverting") {
        const double speed = num(j.at("speed"), context);
        const double level = num(j.at("level"), context);
        return [speed, level](double, double g) { return speed * (level - g); };
    }
    if (type == "proportional")
        return [c = num(j.at("coef"), context)](double, double g) { return c * g; };
    if (type == "sqrt")
        return [c = num(j.at("coef"), context)](double, double g) { return c * std::sqrt(std::max(g, 0.0)); };
    throw ConfigError("unknown coefficient type '" + type + "' in " + context);
}

MmmRandomScalingParams random_scaling_params(const json& model) {
    MmmRandomScalingParams p;
    p.bessel_dim = num(model.at("bessel_dim"), "model.bessel_dim");
    p.z0 = num(model.at("z0"), "model.z0");
    p.gamma0 = num(model.at("gamma0"), "model.gamma0");
    p.rho = model.contains("rho") ? num(model.at("rho"), "model.rho") : 0.0;
    p.r = model.contains("r") ? num(model.at("r"), "model.r") : 0.0;
    p.gamma_drift = coefficient_fn(model.at("gamma_drift"), "model.gamma_drift");
    p.gamma_diffusion = coefficient_fn(model.at("gamma_diffusion"), "model.gamma_diffusion");
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return p;
}

std::array<double, 2> vec2(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("'" + context + "' must have 2 entries");
    return {num(j[0], context), num(j[1], context)};
}

std::array<std::array<double, 2>, 2> mat2(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("'" + context + "' must be 2x2");
    return {vec2(j[0], context), vec2(j[1], context)};
}

GbmConstThetaParams gbm_params(const json& model) {
    GbmConstThetaParams p;
    p.theta = vec2(model.at("theta"), "model.theta");
    p.vols = mat2(model.at("vols"), "model.vols");
    if (model.contains("s_hat_0_0")) p.s_hat_0_0 = num(model.at("s_hat_0_0"), "model.s_hat_0_0");
    if (model.contains("s_hat_j_0")) p.s_hat_j_0 = vec2(model.at("s_hat_j_0"), "model.s_hat_j_0");
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return p;
}

void validate_model(const json& model) {
    const std::string variant = model.at("variant").get<std::string>();
    if (variant == "stylized_mmm") {
        require_keys(model, "model", {"variant", "alpha0", "beta", "z0"}, {"r"});
        stylized_params(model);
    } else if (variant == "random_scaling_mmm") {
        require_keys(model, "model",
                     {"variant", "bessel_dim", "z0", "gamma0", "gamma_drift", "gamma_diffusion"},
                     {"rho", "r"});
        random_scaling_params(model);
    } else if (variant == "gbm_const_theta") {
        require_keys(model, "model", {"variant", "theta", "vols"}, {"s_hat_0_0", "s_hat_j_0"});
        gbm_params(model);
    } else {
        throw ConfigError("unknown model variant '" + variant + "'");
    }
}

TimeGrid grid_from(const json& grid) {
    try {
        return make_time_grid(num(grid.at("t0"), "grid.t0"), num(grid.at("T"), "grid.T"),
                              grid.at("n_steps").get<std::size_t>());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

const std::set<std::string> kTaskTypes = {
    "simulate", "price-zcb",  "price-put", "price-defaultable-put",
    "hedge",    "gkw-regress", "verify",    "tree-lab"};

void validate_task(const json& task) {
    const std::string type = task.at("type").get<std::string>();
    if (!kTaskTypes.count(type)) throw ConfigError("unknown task type '" + type + "'");
    if (type == "simulate") {
        require_keys(task, "task", {"type"}, {"channels"});
    } else if (type == "price-zcb") {
        require_keys(task, "task", {"type", "maturities"}, {"with_mc"});
    } else if (type == "price-put") {
        require_keys(task, "task", {"type", "strikes", "maturity"}, {"with_mc"});
    } else if (type == "price-defaultable-put") {
        require_keys(task, "task", {"type", "strikes", "maturity", "lambda", "recovery"},
                     {"with_mc"});
    } else if (type == "hedge") {
        require_keys(task, "task", {"type", "account", "vols", "maturity"},
                     {"direction", "refinement_steps"});
    } else if (type == "gkw-regress") {
        require_keys(task, "task", {"type", "account", "vols", "maturity"},
                     {"direction", "basis_degree"});
    } else if (type == "verify") {
        require_keys(task, "task", {"type"}, {"checks"});
    } else if (type == "tree-lab") {
        require_keys(task, "task", {"type", "tree_file", "operations"}, {"claim", "exact"});
    }
}

}  // namespace

void validate_config(const json& config) {
    require_keys(config, "(root)", {"model", "grid", "mc", "task", "output"}, {});
    validate_model(config.at("model"));
    require_keys(config.at("grid"), "grid", {"t0", "T", "n_steps"}, {});
    if (!config.at("grid").at("n_steps").is_number_integer() ||
        config.at("grid").at("n_steps").get<long long>() <= 0 ||
        config.at("grid").at("n_steps").get<long long>() > 100000000)
        throw ConfigError("grid.n_steps must be a positive integer");
    grid_from(config.at("grid"));
    require_keys(config.at("mc"), "mc", {"n_paths", "master_seed"}, {});
    if (!config.at("mc").at("n_paths").is_number_integer() ||
        config.at("mc").at("n_paths").get<long long>() <= 0)
        throw ConfigError("mc.n_paths must be a positive integer");
    const json& seed = config.at("mc").at("master_seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
        throw ConfigError("mc.master_seed must be a nonnegative integer");
    validate_task(config.at("task"));
    require_keys(config.at("output"), "output", {"dir"}, {"formats", "write_paths"});
}

std::string config_hash(const json& config) {
    const std::string canonical = config.dump();  // nlohmann sorts object keys
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_plot_csv(const fs::path& path, const std::vector<PlotRow>& rows) {
    std::ofstream out(path);
    out << "series,x,y,y_stderr\n";
    for (const auto& r : rows)
        out << r.series << ',' << fmt17(r.x) << ',' << fmt17(r.y) << ',' << fmt17(r.y_stderr)
            << '\n';
}

namespace {

struct TaskContext {
    json config;
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    fs::path out_dir;
    std::vector<std::string> artifacts;

    std::ofstream open_csv(const std::string& name) {
        artifacts.push_back(name);
        return std::ofstream(out_dir / name);
    }
    void write_json(const std::string& name, const json& j) {
        artifacts.push_back(name);
        std::ofstream out(out_dir / name);
        out << j.dump(2) << '\n';
    }
};

PathBundle simulate_model(const TaskContext& ctx, const TimeGrid& grid) {
    const json& model = ctx.config.at("model");
    const std::string variant = model.at("variant").get<std::string>();
    if (variant == "stylized_mmm")
        return simulate_stylized_mmm(stylized_params(model), grid, ctx.n_paths, ctx.seed);
    if (variant == "random_scaling_mmm")
        return simulate_random_scaling_mmm(random_scaling_params(model), grid, ctx.n_paths,
                                           ctx.seed);
    return simulate_gbm_const_theta(gbm_params(model), grid, ctx.n_paths, ctx.seed);
}

// Raw per-path export, one JSON object per line.
void write_paths_jsonl(TaskContext& ctx, const PathBundle& bundle,
                       const std::vector<std::string>& channels) {
    ctx.artifacts.push_back("paths.jsonl");
    std::ofstream out(ctx.out_dir / "paths.jsonl");
    for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
        json row;
        row["path"] = p;
        for (const auto& name : channels) {
            const auto span = bundle.path(name, p);
            row[name] = std::vector<double>(span.begin(), span.end());
        }
        out << row.dump() << '\n';
    }
}

void task_simulate(TaskContext& ctx) {
    PathBundle bundle = simulate_model(ctx, ctx.grid);
    std::vector<std::string> channels;
    if (ctx.config.at("task").contains("channels"))
        channels = ctx.config.at("task").at("channels").get<std::vector<std::string>>();
    else
        channels = bundle.channel_names();

    auto csv = ctx.open_csv("results.csv");
    csv << "channel,t,mean,stderr\n";
    std::vector<PlotRow> plot;
    std::vector<double> column(bundle.n_paths());
    for (const auto& name : channels) {
        if (!bundle.has(name)) throw ConfigError("simulate: unknown channel '" + name + "'");
        const Channel& ch = bundle.channel(name);
        for (std::size_t i = 0; i < bundle.n_nodes(); ++i) {
            for (std::size_t p = 0; p < bundle.n_paths(); ++p)
                column[p] = ch.data[p * bundle.n_nodes() + i];
            const MeanStats ms = mean_stats(column);
            const double t = ctx.grid.node(i);
            csv << name << ',' << fmt17(t) << ',' << fmt17(ms.mean) << ','
                << fmt17(ms.stderr_mean) << '\n';
            plot.push_back({name, t, ms.mean, ms.stderr_mean});
        }
    }
    ctx.artifacts.push_back("plot.csv");
    write_plot_csv(ctx.out_dir / "plot.csv", plot);
    if (ctx.config.at("output").value("write_paths", false))
        write_paths_jsonl(ctx, bundle, channels);
}

void task_price_zcb(TaskContext& ctx) {
    const json& model = ctx.config.at("model");
    if (model.at("variant").get<std::string>() != "stylized_mmm")
        throw ConfigError("price-zcb requires the stylized_mmm model");
    const StylizedMmmParams params = stylized_params(model);
    const bool with_mc = ctx.config.at("task").value("with_mc", false);

    auto csv = ctx.open_csv("results.csv");
    csv << "t,T,p_hat,f_t" << (with_mc ? ",mc_estimate,mc_stderr,z" : "") << "\n";
    std::vector<PlotRow> plot;
    for (const auto& jm : ctx.config.at("task").at("maturities")) {
        const double maturity = num(jm, "task.maturities");
        const double t0 = ctx.grid.t0;
        const BondQuote q = zcb_price(t0, 1.0 / params.z0, params, maturity);
        csv << fmt17(t0) << ',' << fmt17(maturity) << ',' << fmt17(q.p_hat) << ','
            << fmt17(q.f_t);
        if (with_mc) {
            const TimeGrid g = make_time_grid(t0, maturity, ctx.grid.n_steps);
            PathBundle bundle = simulate_stylized_mmm(params, g, ctx.n_paths, ctx.seed);
            const double discount = std::exp(-params.r * maturity);
            const McPriceResult mc = real_world_price_mc(
                [&](const PathBundle& b, std::size_t p) {
                    return discount * b.at("s_hat_0", p, b.n_nodes() - 1);
                },
                bundle, 0);
            const double z = mc.stderr_mean > 0.0 ? (mc.estimate - q.p_hat) / mc.stderr_mean : 0.0;
            csv << ',' << fmt17(mc.estimate) << ',' << fmt17(mc.stderr_mean) << ',' << fmt17(z);
        }
        csv << '\n';
        plot.push_back({"p_hat", maturity, q.p_hat, 0.0});
    }
    ctx.artifacts.push_back("plot.csv");
    write_plot_csv(ctx.out_dir / "plot.csv", plot);
}

void task_price_put(TaskContext& ctx, bool defaultable) {
    const json& model = ctx.config.at("model");
    if (model.at("variant").get<std::string>() != "stylized_mmm")
        throw ConfigError("put pricing requires the stylized_mmm model");
    const StylizedMmmParams params = stylized_params(model);
    const json& task = ctx.config.at("task");
    const double maturity = num(task.at("maturity"), "task.maturity");
    const bool with_mc = task.value("with_mc", false);
    const double s_hat_0 = 1.0 / params.z0;

    DefaultModel dm;
    if (defaultable) {
        dm.lambda = num(task.at("lambda"), "task.lambda");
        if (dm.lambda < 0.0) throw ConfigError("task.lambda must be >= 0");
        const json& rec = task.at("recovery");
        try {
            dm.recovery = rec.is_number() ? Recovery::constant(rec.get<double>())
                                          : Recovery::piecewise(
                                                rec.at("times").get<std::vector<double>>(),
                                                rec.at("values").get<std::vector<double>>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("task.recovery: ") + e.what());
        }
    }
    const double psi0 = defaultable ? psi_survival_value(dm, ctx.grid.t0, maturity) : 1.0;

    PathBundle bundle(make_time_grid(ctx.grid.t0, maturity, ctx.grid.n_steps), 0);
    if (with_mc) {
        bundle = simulate_stylized_mmm(params, make_time_grid(ctx.grid.t0, maturity, ctx.grid.n_steps),
                                       ctx.n_paths, ctx.seed);
        if (defaultable) default_times(dm, bundle, ctx.seed);
    }

    auto csv = ctx.open_csv("results.csv");
    csv << "t,K,T" << (defaultable ? ",lambda,psi0" : "") << ",closed_form"
        << (with_mc ? ",mc_estimate,mc_stderr,z" : "") << "\n";
    std::vector<PlotRow> plot;
    for (const auto& jk : task.at("strikes")) {
        const double strike = num(jk, "task.strikes");
        const double base = put_price(ctx.grid.t0, strike, s_hat_0, params, maturity);
        const double value = defaultable
                                 ? defaultable_put_price(ctx.grid.t0, strike, s_hat_0, params, dm,
                                                          psi0, maturity)
                                 : base;
        csv << fmt17(ctx.grid.t0) << ',' << fmt17(strike) << ',' << fmt17(maturity);
        if (defaultable) csv << ',' << fmt17(dm.lambda) << ',' << fmt17(psi0);
        csv << ',' << fmt17(value);
        if (with_mc) {
            const McPriceResult mc = real_world_price_mc(
                [&](const PathBundle& b, std::size_t p) {
                    const double payoff =
                        std::max(strike * b.at("s_hat_0", p, b.n_nodes() - 1) - 1.0, 0.0);
                    if (!defaultable) return payoff;
                    const double d_T = b.at("D", p, b.n_nodes() - 1);
                    const double tau = b.path_values("tau")[p];
                    const double h = dm.recovery(std::min(tau, maturity));
                    return payoff * (1.0 + (h - 1.0) * d_T);
                },
                bundle, 0);
            const double z = mc.stderr_mean > 0.0 ? (mc.estimate - value) / mc.stderr_mean : 0.0;
            csv << ',' << fmt17(mc.estimate) << ',' << fmt17(mc.stderr_mean) << ',' << fmt17(z);
        }
        csv << '\n';
        plot.push_back({defaultable ? "defaultable_put" : "put", strike, value, 0.0});
    }
    ctx.artifacts.push_back("plot.csv");
    write_plot_csv(ctx.out_dir / "plot.csv", plot);
}

struct HedgeSetup {
    PathBundle bundle{TimeGrid{}, 0};
    Strategy strategy;
    int account = 1;
    double maturity = 0.0;
};

HedgeSetup build_hedge(TaskContext& ctx) {
    const json& model = ctx.config.at("model");
    const json& task = ctx.config.at("task");
    HedgeSetup setup;
    setup.account = task.at("account").get<int>();
    if (setup.account != 1 && setup.account != 2)
        throw ConfigError("task.account must be 1 or 2");
    setup.maturity = num(task.at("maturity"), "task.maturity");
    const auto vols = mat2(task.at("vols"), "task.vols");
    const std::string variant = model.at("variant").get<std::string>();
    if (setup.maturity != ctx.grid.T) throw ConfigError("task.maturity must equal grid.T");

    if (variant == "stylized_mmm") {
        const StylizedMmmParams params = stylized_params(model);
        setup.bundle = simulate_stylized_mmm(params, ctx.grid, ctx.n_paths, ctx.seed);
        const auto direction =
            task.contains("direction") ? vec2(task.at("direction"), "task.direction")
                                       : std::array<double, 2>{1.0, 0.0};
        add_theta_from_model(setup.bundle, direction);
        add_orthogonal_increments(setup.bundle, ctx.seed);
        simulate_primary_accounts(setup.bundle, vols, {1.0, 1.0});
        add_bond_channel(setup.bundle, params, setup.maturity);
        setup.strategy = stylized_gkw_strategy(setup.bundle, setup.account,
                                               vols[setup.account - 1], params, setup.maturity);
    } else if (variant == "gbm_const_theta") {
        const GbmConstThetaParams params = gbm_params(model);
        setup.bundle = simulate_gbm_const_theta(params, ctx.grid, ctx.n_paths, ctx.seed);
        simulate_primary_accounts(setup.bundle, params.vols, params.s_hat_j_0);
        setup.strategy = gbm_gkw_strategy(setup.bundle, setup.account, params.theta,
                                          params.vols[setup.account - 1]);
    } else {
        throw ConfigError("hedge tasks support stylized_mmm and gbm_const_theta models");
    }
    return setup;
}

void task_hedge(TaskContext& ctx) {
    HedgeSetup setup = build_hedge(ctx);
    const std::string value_channel = "s_hat_" + std::to_string(setup.account);
    // the cost process trades the bond leg; the residual driver is not traded
    Strategy traded;
    traded.instruments = {setup.strategy.instruments.at(0)};
    traded.holdings = {setup.strategy.holdings.at(0)};
    traded.n_paths = setup.strategy.n_paths;
    traded.n_steps = setup.strategy.n_steps;
    const CostProcess cost = cost_process(setup.bundle, value_channel, traded);

    // replication quality
    const std::size_t nn = setup.bundle.n_nodes();
    std::vector<double> h0_col(setup.bundle.n_paths());
    for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p)
        h0_col[p] = setup.bundle.at(value_channel, p, 0);
    const double h0 = mean_stats(h0_col).mean;
    const std::vector<double> replicated = replicate_terminal(setup.bundle, setup.strategy, h0);
    std::vector<double> sq(setup.bundle.n_paths());
    for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p) {
        const double d = replicated[p] - setup.bundle.at(value_channel, p, nn - 1);
        sq[p] = d * d;
    }
    const double rms = std::sqrt(mean_stats(sq).mean);

    std::vector<PlotRow> plot;
    std::vector<double> column(setup.bundle.n_paths());
    for (std::size_t i = 0; i < nn; ++i) {
        const double t = ctx.grid.node(i);
        for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p)
            column[p] = setup.bundle.at(value_channel, p, i);
        const MeanStats value_ms = mean_stats(column);
        plot.push_back({"value", t, value_ms.mean, value_ms.stderr_mean});
        for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p) column[p] = cost.at(p, i);
        const MeanStats cost_ms = mean_stats(column);
        plot.push_back({"cost", t, cost_ms.mean, cost_ms.stderr_mean});
        for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p) {
            const double d = cost.at(p, nn - 1) - cost.at(p, i);
            column[p] = d * d;
        }
        const MeanStats risk_ms = mean_stats(column);
        plot.push_back({"risk", t, risk_ms.mean, risk_ms.stderr_mean});
    }

    // optional convergence study: replication RMS against the step size
    if (ctx.config.at("task").contains("refinement_steps")) {
        for (const auto& js : ctx.config.at("task").at("refinement_steps")) {
            const std::size_t steps = js.get<std::size_t>();
            TaskContext refined = ctx;
            refined.config["grid"]["n_steps"] = steps;
            refined.grid = grid_from(refined.config.at("grid"));
            HedgeSetup sub = build_hedge(refined);
            std::vector<double> h0_sub(sub.bundle.n_paths());
            for (std::size_t p = 0; p < sub.bundle.n_paths(); ++p)
                h0_sub[p] = sub.bundle.at(value_channel, p, 0);
            const auto replicated_sub =
                replicate_terminal(sub.bundle, sub.strategy, mean_stats(h0_sub).mean);
            std::vector<double> sq(sub.bundle.n_paths());
            for (std::size_t p = 0; p < sub.bundle.n_paths(); ++p) {
                const double d = replicated_sub[p] -
                                 sub.bundle.at(value_channel, p, sub.bundle.n_nodes() - 1);
                sq[p] = d * d;
            }
            plot.push_back({"replication_rms", refined.grid.dt(),
                            std::sqrt(mean_stats(sq).mean), 0.0});
        }
    }
    ctx.artifacts.push_back("plot.csv");
    write_plot_csv(ctx.out_dir / "plot.csv", plot);

    // cost-martingale z across nodes
    PathBundle cost_bundle(ctx.grid, setup.bundle.n_paths());
    auto& cchan = cost_bundle.add("cost", ChannelKind::Level);
    cchan.data = cost.cost;
    const DriftReport drift = drift_report(cost_bundle, "cost", DriftTest::MartingaleTwoSided);

    auto csv = ctx.open_csv("results.csv");
    csv << "h0,replication_rms,risk0,cost_martingale_max_z\n";
    csv << fmt17(h0) << ',' << fmt17(rms) << ',' << fmt17(cost.risk0) << ','
        << fmt17(drift.max_z) << '\n';

    // raw strategy and cost paths on request
    if (ctx.config.at("output").value("write_paths", false)) {
        ctx.artifacts.push_back("paths.jsonl");
        std::ofstream out(ctx.out_dir / "paths.jsonl");
        const std::size_t n_steps = setup.strategy.n_steps;
        for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p) {
            json row;
            row["path"] = p;
            const auto value_span = setup.bundle.path(value_channel, p);
            row["value"] = std::vector<double>(value_span.begin(), value_span.end());
            row["cost"] = std::vector<double>(cost.cost.begin() + p * nn,
                                              cost.cost.begin() + (p + 1) * nn);
            for (std::size_t k = 0; k < setup.strategy.instruments.size(); ++k)
                row["holdings_" + setup.strategy.instruments[k]] = std::vector<double>(
                    setup.strategy.holdings[k].begin() + p * n_steps,
                    setup.strategy.holdings[k].begin() + (p + 1) * n_steps);
            out << row.dump() << '\n';
        }
    }
}

void task_gkw_regress(TaskContext& ctx) {
    HedgeSetup setup = build_hedge(ctx);
    const json& task = ctx.config.at("task");
    const unsigned degree = task.value("basis_degree", 3u);
    const std::string value_channel = "s_hat_" + std::to_string(setup.account);
    const std::size_t nn = setup.bundle.n_nodes();

    std::vector<double> payoff(setup.bundle.n_paths());
    for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p)
        payoff[p] = setup.bundle.at(value_channel, p, nn - 1);

    const std::vector<std::string> state =
        setup.bundle.has("Z") ? std::vector<std::string>{"Z", value_channel}
                              : std::vector<std::string>{"s_hat_0", value_channel};
    const DecompositionResult dec =
        gkw_regression(setup.bundle, payoff, {"P_hat", "dW_perp"}, state, degree);

    // compare the regression integrand on the bond with the closed form
    double num_acc = 0.0, den_acc = 0.0;
    for (std::size_t p = 0; p < setup.bundle.n_paths(); ++p)
        for (std::size_t i = 0; i + 1 < nn; ++i) {
            const double closed = setup.strategy.at(0, p, i);
            const double fitted = dec.integrand.at(0, p, i);
            num_acc += (fitted - closed) * (fitted - closed);
            den_acc += closed * closed;
        }
    const double rel_rms = std::sqrt(num_acc / std::max(den_acc, 1e-300));

    auto csv = ctx.open_csv("results.csv");
    csv << "h0,integrand_rel_rms,residual_mean,rank_deficient\n";
    csv << fmt17(dec.h0) << ',' << fmt17(rel_rms) << ','
        << fmt17(mean_stats(dec.residual_terminal).mean) << ',' << (dec.rank_deficient ? 1 : 0)
        << '\n';
}

void task_verify(TaskContext& ctx) {
    const json& model = ctx.config.at("model");
    if (model.at("variant").get<std::string>() != "stylized_mmm")
        throw ConfigError("verify task requires the stylized_mmm model");
    const StylizedMmmParams params = stylized_params(model);
    std::vector<std::string> checks = {"supermartingale", "martingale_bond",
                                       "strict_local_martingale"};
    if (ctx.config.at("task").contains("checks"))
        checks = ctx.config.at("task").at("checks").get<std::vector<std::string>>();

    PathBundle bundle = simulate_stylized_mmm(params, ctx.grid, ctx.n_paths, ctx.seed);
    add_bond_channel(bundle, params, ctx.grid.T);

    json reports = json::array();
    for (const auto& check : checks) {
        if (check == "supermartingale") {
            reports.push_back(json::parse(drift_report_json(supermartingale_check(bundle, "s_hat_0"))));
        } else if (check == "martingale_bond") {
            reports.push_back(json::parse(
                drift_report_json(drift_report(bundle, "P_hat", DriftTest::MartingaleTwoSided))));
        } else if (check == "strict_local_martingale") {
            reports.push_back(json::parse(
                local_martingale_report_json(strict_local_martingale_check(bundle, params))));
        } else {
            throw ConfigError("unknown verify check '" + check + "'");
        }
    }
    ctx.write_json("report.json", reports);
    bool all_pass = true;
    for (const auto& r : reports) all_pass = all_pass && r.at("verdict") == "pass";
    if (!all_pass) throw NumericalError("verify: at least one check failed (see report.json)");
}

void task_tree_lab(TaskContext& ctx) {
    const json& task = ctx.config.at("task");
    const std::string tree_file = task.at("tree_file").get<std::string>();
    const bool exact = task.value("exact", false);
    const auto operations = task.at("operations").get<std::vector<std::string>>();

    json results;
    results["tree_file"] = tree_file;
    results["exact"] = exact;

    const TreeModel<double> tree = load_tree(tree_file);
    const std::size_t last = tree.n_levels() - 1;
    const auto& leaves = tree.level(last);

    std::vector<double> claim(leaves.size(), 0.0);
    int claim_asset = -1;
    if (task.contains("claim")) {
        const json& jc = task.at("claim");
        if (jc.is_array()) {
            if (jc.size() != leaves.size())
                throw ConfigError("task.claim length must match the leaf count");
            for (std::size_t k = 0; k < leaves.size(); ++k)
                claim[k] = num(jc[k], "task.claim");
        } else if (jc.is_object() && jc.contains("asset")) {
            claim_asset = jc.at("asset").get<int>();
            for (std::size_t k = 0; k < leaves.size(); ++k)
                claim[k] = tree.node(leaves[k]).assets.at(claim_asset);
        } else {
            throw ConfigError("task.claim must be an array or {\"asset\": j}");
        }
    }

    for (const auto& op : operations) {
        if (op == "doob") {
            std::vector<double> x(tree.nodes.size());
            for (std::size_t i = 0; i < tree.nodes.size(); ++i) x[i] = tree.nodes[i].assets.at(0);
            const auto doob = doob_decomposition(tree, x);
            json nodes = json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back({{"id", n.id},
                                 {"martingale", doob.martingale[tree.pos(n.id)]},
                                 {"compensator", doob.compensator[tree.pos(n.id)]}});
            results["doob"] = nodes;
        } else if (op == "structure") {
            try {
                const auto sc = structure_condition(tree);
                json nodes = json::array();
                for (const auto& n : tree.nodes)
                    nodes.push_back({{"id", n.id},
                                     {"lambda_hat", sc.lambda_hat[tree.pos(n.id)]},
                                     {"k_hat", sc.k_hat[tree.pos(n.id)]},
                                     {"z_hat", sc.z_hat[tree.pos(n.id)]}});
                results["structure"] = {{"nodes", nodes},
                                        {"rank_deficient", sc.rank_deficient},
                                        {"min_z_hat", sc.min_z_hat}};
            } catch (const TreeStructureViolation& e) {
                throw NumericalError(e.what());
            }
        } else if (op == "fs") {
            const auto dec = fs_decompose(tree, claim);
            const auto checks = check_decomposition(tree, claim, dec);
            results["fs"] = {{"h0", dec.h0},
                             {"max_identity_error", checks.max_identity_error},
                             {"max_cost_martingale_error", checks.max_cost_martingale_error},
                             {"max_orthogonality_error", checks.max_orthogonality_error},
                             {"rank_deficient", dec.rank_deficient}};
            if (exact) {
                const TreeModel<Rational> rtree = load_tree_exact(tree_file);
                std::vector<Rational> rclaim(leaves.size());
                for (std::size_t k = 0; k < leaves.size(); ++k)
                    rclaim[k] = claim_asset >= 0
                                    ? rtree.node(leaves[k]).assets.at(claim_asset)
                                    : Rational::from_double(claim[k]);
                const auto rdec = fs_decompose(rtree, rclaim);
                const auto rchecks = check_decomposition(rtree, rclaim, rdec);
                results["fs_exact"] = {{"h0", rdec.h0.to_string()},
                                       {"max_identity_error", rchecks.max_identity_error},
                                       {"max_cost_martingale_error",
                                        rchecks.max_cost_martingale_error},
                                       {"max_orthogonality_error",
                                        rchecks.max_orthogonality_error}};
            }
        } else if (op == "brute-force") {
            const auto dec = fs_decompose(tree, claim);
            const auto report = brute_force_optimality(tree, claim, dec);
            results["brute_force"] = {{"martingale_assets", report.martingale_assets},
                                      {"cost_martingale_ok", report.cost_martingale_ok},
                                      {"orthogonality_ok", report.orthogonality_ok},
                                      {"minimality_ok", report.minimality_ok},
                                      {"min_risk_margin", report.min_risk_margin},
                                      {"pass", report.pass}};
            if (!report.pass) throw NumericalError("tree-lab: brute-force optimality failed");
        } else if (op == "incomplete-info") {
            const auto report = verify_incomplete_info(tree, claim);
            results["incomplete_info"] = {
                {"attainable", report.attainable},
                {"h0", report.h0},
                {"l0_abs", report.l0_abs},
                {"max_decomposition_error", report.max_decomposition_error},
                {"max_l_martingale_error", report.max_l_martingale_error},
                {"max_orth_error_projected", report.max_orth_error_projected},
                {"max_orth_error_fs", report.max_orth_error_fs},
                {"max_jensen_violation", report.max_jensen_violation},
                {"strategy_gap", report.strategy_gap},
                {"strategies_coincide", report.strategies_coincide}};
        } else {
            throw ConfigError("unknown tree-lab operation '" + op + "'");
        }
    }
    ctx.write_json("results.json", results);
}

}  // namespace

RunResult run_task(const json& config, const std::string& out_dir_override, unsigned threads) {
    validate_config(config);
    worker_threads() = threads;

    TaskContext ctx;
    ctx.config = config;
    ctx.grid = grid_from(config.at("grid"));
    ctx.n_paths = config.at("mc").at("n_paths").get<std::size_t>();
    ctx.seed = config.at("mc").at("master_seed").get<std::uint64_t>();

    std::string out_dir = config.at("output").at("dir").get<std::string>();
    if (const char* env = std::getenv("OUTPUT_DIR")) out_dir = env;
    if (!out_dir_override.empty()) out_dir = out_dir_override;
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);

    const auto start = std::chrono::steady_clock::now();
    const std::string type = config.at("task").at("type").get<std::string>();
    if (type == "simulate")
        task_simulate(ctx);
    else if (type == "price-zcb")
        task_price_zcb(ctx);
    else if (type == "price-put")
        task_price_put(ctx, false);
    else if (type == "price-defaultable-put")
        task_price_put(ctx, true);
    else if (type == "hedge")
        task_hedge(ctx);
    else if (type == "gkw-regress")
        task_gkw_regress(ctx);
    else if (type == "verify")
        task_verify(ctx);
    else if (type == "tree-lab")
        task_tree_lab(ctx);
    else
        throw ConfigError("unknown task type '" + type + "'");
    const auto end = std::chrono::steady_clock::now();

    json manifest;
    manifest["config_hash"] = config_hash(config);
    manifest["master_seed"] = ctx.seed;
    manifest["n_paths"] = ctx.n_paths;
    manifest["task"] = type;
    manifest["version"] = kVersion;
    manifest["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
    ctx.write_json("manifest.json", manifest);

    RunResult result;
    result.output_dir = ctx.out_dir;
    result.artifacts = ctx.artifacts;
    return result;
}

}  // namespace benchhedge::tool
