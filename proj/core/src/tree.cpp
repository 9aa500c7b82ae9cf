#include "benchhedge/tree.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace benchhedge {

namespace {

template <typename S>
S parse_scalar(const nlohmann::json& v);

template <>
double parse_scalar<double>(const nlohmann::json& v) {
    if (v.is_string()) return Rational::from_string(v.get<std::string>()).to_double();
    return v.get<double>();
}

template <>
Rational parse_scalar<Rational>(const nlohmann::json& v) {
    if (v.is_string()) return Rational::from_string(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    return Rational::from_double(v.get<double>());
}

template <typename S>
TreeModel<S> parse_tree_impl(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw std::invalid_argument("tree json: missing nodes array");
    TreeModel<S> tree;
    std::map<int, double> level_time;
    for (const auto& jn : j["nodes"]) {
        TreeNode<S> n;
        n.id = jn.at("id").get<int>();
        n.parent = jn.contains("parent") && !jn["parent"].is_null() ? jn["parent"].get<int>() : -1;
        if (jn.contains("prob") && !jn["prob"].is_null()) n.prob = parse_scalar<S>(jn["prob"]);
        for (const auto& a : jn.at("assets")) n.assets.push_back(parse_scalar<S>(a));
        if (jn.contains("fine_label") && !jn["fine_label"].is_null())
            n.label = jn["fine_label"].get<std::string>();
        if (jn.contains("time") && !jn["time"].is_null()) {
            // times are informational; consistency per level checked below
            n.level = -1;
        }
        tree.nodes.push_back(std::move(n));
    }
    for (auto& n : tree.nodes) n.level = 0;
    tree.finalize();
    // record per-level times when provided
    std::vector<double> times(tree.n_levels(), -1.0);
    std::size_t k = 0;
    for (const auto& jn : j["nodes"]) {
        const auto& n = tree.nodes[k++];
        if (jn.contains("time") && !jn["time"].is_null()) {
            const double t = jn["time"].get<double>();
            if (times[n.level] < 0.0) {
                times[n.level] = t;
            } else if (times[n.level] != t) {
                throw std::invalid_argument("tree json: nodes of one level disagree on time");
            }
        }
    }
    bool have_all = true;
    for (double t : times) have_all = have_all && t >= 0.0;
    if (have_all) {
        for (std::size_t l = 1; l < times.size(); ++l)
            if (!(times[l] > times[l - 1]))
                throw std::invalid_argument("tree json: level times must increase");
        tree.level_times = times;
    }
    return tree;
}

template <typename S>
TreeModel<S> load_tree_impl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tree: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tree_impl<S>(ss.str());
}

}  // namespace

TreeModel<double> parse_tree(const std::string& json_text) {
    return parse_tree_impl<double>(json_text);
}
TreeModel<Rational> parse_tree_exact(const std::string& json_text) {
    return parse_tree_impl<Rational>(json_text);
}
TreeModel<double> load_tree(const std::string& path) { return load_tree_impl<double>(path); }
TreeModel<Rational> load_tree_exact(const std::string& path) {
    return load_tree_impl<Rational>(path);
}

}  // namespace benchhedge
