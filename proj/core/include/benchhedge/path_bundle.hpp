#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "benchhedge/time_grid.hpp"

namespace benchhedge {

// Whether a channel holds node values or per-step increments. Increment
// channels keep the common (n_steps+1) layout with slot 0 fixed at zero, so
// entry i is the increment over (t_{i-1}, t_i].
enum class ChannelKind { Level, Increment };

struct Channel {
    ChannelKind kind = ChannelKind::Level;
    std::vector<double> data;  // n_paths * (n_steps + 1), path-major
};

// Simulated state of a batch of paths: a time grid plus named per-path
// channels, and optional per-path scalars (e.g. exact default times).
class PathBundle {
public:
    PathBundle() = default;
    PathBundle(TimeGrid grid, std::size_t n_paths) : grid_(grid), n_paths_(n_paths) {}

    const TimeGrid& grid() const { return grid_; }
    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_nodes() const { return grid_.n_nodes(); }

    bool has(const std::string& name) const { return channels_.count(name) != 0; }

    Channel& add(const std::string& name, ChannelKind kind) {
        auto [it, inserted] = channels_.try_emplace(name);
        if (!inserted) throw std::invalid_argument("PathBundle: channel exists: " + name);
        it->second.kind = kind;
        it->second.data.assign(n_paths_ * n_nodes(), 0.0);
        return it->second;
    }

    Channel& channel(const std::string& name) {
        auto it = channels_.find(name);
        if (it == channels_.end()) throw std::invalid_argument("PathBundle: missing channel: " + name);
        return it->second;
    }
    const Channel& channel(const std::string& name) const {
        auto it = channels_.find(name);
        if (it == channels_.end()) throw std::invalid_argument("PathBundle: missing channel: " + name);
        return it->second;
    }

    std::span<double> path(const std::string& name, std::size_t p) {
        Channel& c = channel(name);
        return {c.data.data() + p * n_nodes(), n_nodes()};
    }
    std::span<const double> path(const std::string& name, std::size_t p) const {
        const Channel& c = channel(name);
        return {c.data.data() + p * n_nodes(), n_nodes()};
    }

    double at(const std::string& name, std::size_t p, std::size_t node) const {
        return channel(name).data[p * n_nodes() + node];
    }

    std::vector<std::string> channel_names() const {
        std::vector<std::string> names;
        names.reserve(channels_.size());
        for (const auto& [k, v] : channels_) names.push_back(k);
        return names;
    }

    // Per-path scalar values (exact jump times and the like).
    std::vector<double>& add_path_values(const std::string& name) {
        auto [it, inserted] = path_values_.try_emplace(name);
        if (!inserted) throw std::invalid_argument("PathBundle: path values exist: " + name);
        it->second.assign(n_paths_, 0.0);
        return it->second;
    }
    bool has_path_values(const std::string& name) const { return path_values_.count(name) != 0; }
    std::vector<double>& path_values(const std::string& name) {
        auto it = path_values_.find(name);
        if (it == path_values_.end())
            throw std::invalid_argument("PathBundle: missing path values: " + name);
        return it->second;
    }
    const std::vector<double>& path_values(const std::string& name) const {
        auto it = path_values_.find(name);
        if (it == path_values_.end())
            throw std::invalid_argument("PathBundle: missing path values: " + name);
        return it->second;
    }

    // Throws if a declared-nonnegative channel dips below zero anywhere.
    void require_nonnegative(const std::string& name) const {
        const Channel& c = channel(name);
        for (double v : c.data)
            if (v < 0.0)
                throw std::runtime_error("PathBundle: channel " + name + " has negative entries");
    }

private:
    TimeGrid grid_;
    std::size_t n_paths_ = 0;
    std::map<std::string, Channel> channels_;
    std::map<std::string, std::vector<double>> path_values_;
};

}  // namespace benchhedge
