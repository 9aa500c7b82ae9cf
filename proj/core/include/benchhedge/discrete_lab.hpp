#pragma once

#include <string>
#include <vector>

#include "benchhedge/rng.hpp"
#include "benchhedge/tree.hpp"

namespace benchhedge {

// Everything in this header is exact: double mode carries only rounding
// error (checked at 1e-12 in the tests), Rational mode none at all.

namespace lab_detail {

inline bool pivot_negligible(double v, double scale) {
    return std::fabs(v) <= 1e-12 * std::max(scale, 1.0);
}
inline bool pivot_negligible(const Rational& v, const Rational&) { return v == Rational(0); }

// Gaussian elimination with full pivoting on [A | b]; particular solution
// with free variables at zero. Reports rank and consistency.
template <typename S>
struct GaussResult {
    std::vector<S> x;
    std::size_t rank = 0;
    bool consistent = true;
};

template <typename S>
GaussResult<S> gauss_solve(std::vector<std::vector<S>> a, std::vector<S> b) {
    const std::size_t n = b.size();
    GaussResult<S> out;
    out.x.assign(n, S{});
    std::vector<std::size_t> col_of(n);
    for (std::size_t i = 0; i < n; ++i) col_of[i] = i;

    S scale{};
    for (const auto& row : a)
        for (const auto& v : row)
            if (scale < scalar_abs(v)) scale = scalar_abs(v);

    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < n; ++c) {
        // full pivot in the remaining block
        std::size_t pr = r, pc = c;
        S best{};
        for (std::size_t i = r; i < n; ++i)
            for (std::size_t j = c; j < n; ++j)
                if (best < scalar_abs(a[i][j])) {
                    best = scalar_abs(a[i][j]);
                    pr = i;
                    pc = j;
                }
        if (pivot_negligible(best, scale)) break;
        std::swap(a[r], a[pr]);
        std::swap(b[r], b[pr]);
        for (std::size_t i = 0; i < n; ++i) std::swap(a[i][c], a[i][pc]);
        std::swap(col_of[c], col_of[pc]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == r) continue;
            if (a[i][c] == S{}) continue;
            const S factor = a[i][c] / a[r][c];
            for (std::size_t j = c; j < n; ++j) a[i][j] -= factor * a[r][j];
            b[i] -= factor * b[r];
        }
        ++r;
    }
    out.rank = r;
    for (std::size_t i = r; i < n; ++i)
        if (!pivot_negligible(scalar_abs(b[i]), scale)) out.consistent = false;
    // back substitution on the diagonalized block
    for (std::size_t i = 0; i < r; ++i) out.x[col_of[i]] = b[i] / a[i][i];
    return out;
}

// Least-norm solution of the symmetric PSD system C x = b: full-rank solves
// directly; otherwise substitutes x = C z and solves C^2 z = b, which lands
// in the row space.
template <typename S>
struct LeastNormResult {
    std::vector<S> x;
    bool rank_deficient = false;
    bool consistent = true;
};

template <typename S>
LeastNormResult<S> least_norm_sym(const std::vector<std::vector<S>>& c, const std::vector<S>& b) {
    const std::size_t n = b.size();
    LeastNormResult<S> out;
    GaussResult<S> direct = gauss_solve(c, b);
    if (direct.rank == n) {
        out.x = std::move(direct.x);
        return out;
    }
    out.rank_deficient = true;
    out.consistent = direct.consistent;
    if (!direct.consistent) {
        out.x.assign(n, S{});
        return out;
    }
    std::vector<std::vector<S>> c2(n, std::vector<S>(n, S{}));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) c2[i][j] += c[i][k] * c[k][j];
    GaussResult<S> z = gauss_solve(c2, b);
    out.x.assign(n, S{});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) out.x[i] += c[i][k] * z.x[k];
    return out;
}

// Conditioning units of one backward step: fine nodes, or coarse atoms.
template <typename S>
std::vector<std::vector<int>> units_at(const TreeModel<S>& tree, std::size_t level, bool coarse) {
    if (coarse) return tree.atoms(level);
    std::vector<std::vector<int>> units;
    units.reserve(tree.level(level).size());
    for (int id : tree.level(level)) units.push_back({id});
    return units;
}

}  // namespace lab_detail

// ---------------------------------------------------------------------------
// Doob decomposition

template <typename S>
struct TreeDoob {
    TreeProcess<S> martingale;   // M, null at the root
    TreeProcess<S> compensator;  // V, predictable, null at the root
};

// X = X_0 + M + V with dV_t = E[dX_t | F_{t-1}]; exact on the tree. With
// `coarse` the conditioning runs over label atoms instead of fine nodes.
template <typename S>
TreeDoob<S> doob_decomposition(const TreeModel<S>& tree, const TreeProcess<S>& x,
                               bool coarse = false) {
    if (x.size() != tree.nodes.size())
        throw std::invalid_argument("doob_decomposition: process size mismatch");
    TreeDoob<S> out;
    out.martingale.assign(tree.nodes.size(), S{});
    out.compensator.assign(tree.nodes.size(), S{});
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (const auto& unit : lab_detail::units_at(tree, l, coarse)) {
            S total{};
            for (int id : unit) total += tree.node(id).prob_total;
            S drift{};
            for (int id : unit) {
                const auto& n = tree.node(id);
                const S w = n.prob_total / total;
                for (int c : n.children)
                    drift += w * tree.node(c).prob * (x[tree.pos(c)] - x[tree.pos(id)]);
            }
            for (int id : unit) {
                const auto& n = tree.node(id);
                for (int c : n.children) {
                    const std::size_t pc = tree.pos(c);
                    const std::size_t pn = tree.pos(id);
                    out.compensator[pc] = out.compensator[pn] + drift;
                    out.martingale[pc] =
                        out.martingale[pn] + (x[pc] - x[pn]) - drift;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structure condition

struct TreeStructureViolation : std::runtime_error {
    explicit TreeStructureViolation(const std::string& what) : std::runtime_error(what) {}
};

template <typename S>
struct StructureConditionResult {
    TreeVectorProcess<S> lambda_hat;  // per left node, per asset
    TreeProcess<S> k_hat;             // mean-variance tradeoff, per node
    TreeProcess<S> z_hat;             // discrete stochastic exponential, per node
    bool rank_deficient = false;
    double min_z_hat = 0.0;  // positivity of z_hat flags arbitrage consistency
};

// Per step solve of Cov(dS) lambda = E[dS]; K accumulates lambda' Cov lambda
// and Z is the stochastic exponential of -lambda . dM. Throws
// TreeStructureViolation when a drift leaves the covariance range.
template <typename S>
StructureConditionResult<S> structure_condition(const TreeModel<S>& tree) {
    const std::size_t d = tree.n_assets();
    StructureConditionResult<S> out;
    out.lambda_hat.assign(tree.nodes.size(), std::vector<S>(d, S{}));
    out.k_hat.assign(tree.nodes.size(), S{});
    out.z_hat.assign(tree.nodes.size(), S{});
    out.z_hat[tree.pos(tree.root())] = scalar_from_int(1, S{});
    out.min_z_hat = 1.0;

    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (int id : tree.level(l)) {
            const auto& n = tree.node(id);
            const std::size_t pn = tree.pos(id);
            std::vector<S> mean(d, S{});
            for (int c : n.children) {
                const auto& child = tree.node(c);
                for (std::size_t j = 0; j < d; ++j)
                    mean[j] += child.prob * (child.assets[j] - n.assets[j]);
            }
            std::vector<std::vector<S>> cov(d, std::vector<S>(d, S{}));
            for (int c : n.children) {
                const auto& child = tree.node(c);
                for (std::size_t j = 0; j < d; ++j) {
                    const S dj = child.assets[j] - n.assets[j] - mean[j];
                    for (std::size_t k = 0; k < d; ++k) {
                        const S dk = child.assets[k] - n.assets[k] - mean[k];
                        cov[j][k] += child.prob * dj * dk;
                    }
                }
            }
            const auto solved = lab_detail::least_norm_sym(cov, mean);
            if (!solved.consistent)
                throw TreeStructureViolation(
                    "structure condition violated at node " + std::to_string(id) +
                    ": drift not absolutely continuous w.r.t. the martingale covariance");
            out.rank_deficient = out.rank_deficient || solved.rank_deficient;
            out.lambda_hat[pn] = solved.x;

            S quad{};
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t k = 0; k < d; ++k) quad += solved.x[j] * cov[j][k] * solved.x[k];
            for (int c : n.children) {
                const auto& child = tree.node(c);
                const std::size_t pc = tree.pos(c);
                out.k_hat[pc] = out.k_hat[pn] + quad;
                S lam_dm{};
                for (std::size_t j = 0; j < d; ++j)
                    lam_dm += solved.x[j] * (child.assets[j] - n.assets[j] - mean[j]);
                out.z_hat[pc] = out.z_hat[pn] * (scalar_from_int(1, S{}) - lam_dm);
                out.min_z_hat = std::min(out.min_z_hat, scalar_to_double(out.z_hat[pc]));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Orthogonal decomposition by backward induction

template <typename S>
struct TreeDecomposition {
    S h0{};
    TreeVectorProcess<S> xi;  // holdings per left node, per asset
    TreeProcess<S> value;     // value process, per node
    TreeProcess<S> residual;  // L, per node, null at the root
    TreeProcess<S> cost;      // h0 + L
    bool rank_deficient = false;
};

// Locally risk-minimizing backward recursion: at every conditioning unit,
//   Cov(dS, dS) xi = Cov(dS, V_next),   V_prev = E[V_next] - xi . E[dS],
// and the residual increment is the unexplained remainder, exactly strongly
// orthogonal to the martingale part step by step.
template <typename S>
TreeDecomposition<S> fs_decompose(const TreeModel<S>& tree, const std::vector<S>& claim_leaves,
                                  bool coarse = false) {
    const std::size_t d = tree.n_assets();
    const std::size_t last = tree.n_levels() - 1;
    const auto& leaves = tree.level(last);
    if (claim_leaves.size() != leaves.size())
        throw std::invalid_argument("fs_decompose: claim size mismatch with leaf count");

    TreeDecomposition<S> out;
    out.xi.assign(tree.nodes.size(), std::vector<S>(d, S{}));
    out.value.assign(tree.nodes.size(), S{});
    out.residual.assign(tree.nodes.size(), S{});
    out.cost.assign(tree.nodes.size(), S{});
    for (std::size_t k = 0; k < leaves.size(); ++k) out.value[tree.pos(leaves[k])] = claim_leaves[k];

    for (std::size_t l = last; l-- > 0;) {
        for (const auto& unit : lab_detail::units_at(tree, l, coarse)) {
            S total{};
            for (int id : unit) total += tree.node(id).prob_total;
            std::vector<S> mean_ds(d, S{});
            S mean_v{};
            std::vector<std::vector<S>> e_ss(d, std::vector<S>(d, S{}));
            std::vector<S> e_sv(d, S{});
            for (int id : unit) {
                const auto& n = tree.node(id);
                const S wn = n.prob_total / total;
                for (int c : n.children) {
                    const auto& child = tree.node(c);
                    const S w = wn * child.prob;
                    const S v = out.value[tree.pos(c)];
                    mean_v += w * v;
                    for (std::size_t j = 0; j < d; ++j) {
                        const S ds = child.assets[j] - n.assets[j];
                        mean_ds[j] += w * ds;
                        e_sv[j] += w * ds * v;
                        for (std::size_t k = 0; k < d; ++k)
                            e_ss[j][k] += w * ds * (child.assets[k] - n.assets[k]);
                    }
                }
            }
            std::vector<std::vector<S>> cov(d, std::vector<S>(d, S{}));
            std::vector<S> rhs(d, S{});
            for (std::size_t j = 0; j < d; ++j) {
                rhs[j] = e_sv[j] - mean_ds[j] * mean_v;
                for (std::size_t k = 0; k < d; ++k)
                    cov[j][k] = e_ss[j][k] - mean_ds[j] * mean_ds[k];
            }
            auto solved = lab_detail::least_norm_sym(cov, rhs);
            out.rank_deficient = out.rank_deficient || solved.rank_deficient;
            S v_prev = mean_v;
            for (std::size_t j = 0; j < d; ++j) v_prev -= solved.x[j] * mean_ds[j];
            for (int id : unit) {
                out.value[tree.pos(id)] = v_prev;
                out.xi[tree.pos(id)] = solved.x;
            }
        }
    }
    out.h0 = out.value[tree.pos(tree.root())];
    // Residual by forward accumulation of the unexplained increments.
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (int id : tree.level(l)) {
            const auto& n = tree.node(id);
            const std::size_t pn = tree.pos(id);
            for (int c : n.children) {
                const auto& child = tree.node(c);
                const std::size_t pc = tree.pos(c);
                S gain{};
                for (std::size_t j = 0; j < d; ++j)
                    gain += out.xi[pn][j] * (child.assets[j] - n.assets[j]);
                out.residual[pc] = out.residual[pn] + out.value[pc] - out.value[pn] - gain;
            }
        }
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) out.cost[i] = out.h0 + out.residual[i];
    return out;
}

// Residual diagnostics of a decomposition: decomposition identity per leaf,
// cost-martingale property per unit, and strong orthogonality of the
// residual increments to the asset martingale parts.
template <typename S>
struct DecompositionChecks {
    double max_identity_error = 0.0;
    double max_cost_martingale_error = 0.0;
    double max_orthogonality_error = 0.0;
};

template <typename S>
DecompositionChecks<S> check_decomposition(const TreeModel<S>& tree,
                                           const std::vector<S>& claim_leaves,
                                           const TreeDecomposition<S>& dec, bool coarse = false) {
    const std::size_t d = tree.n_assets();
    const std::size_t last = tree.n_levels() - 1;
    DecompositionChecks<S> out;

    // identity: claim = h0 + sum xi . dS + L_T along every path
    const auto& leaves = tree.level(last);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        S acc = dec.h0 + dec.residual[tree.pos(leaves[k])];
        int cur = leaves[k];
        while (tree.node(cur).parent >= 0) {
            const auto& n = tree.node(cur);
            const auto& par = tree.node(n.parent);
            for (std::size_t j = 0; j < d; ++j)
                acc += dec.xi[tree.pos(n.parent)][j] * (n.assets[j] - par.assets[j]);
            cur = n.parent;
        }
        out.max_identity_error = std::max(
            out.max_identity_error, scalar_to_double(scalar_abs(acc - claim_leaves[k])));
    }

    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (const auto& unit : lab_detail::units_at(tree, l, coarse)) {
            S total{};
            for (int id : unit) total += tree.node(id).prob_total;
            std::vector<S> mean_ds(d, S{});
            S mean_dl{};
            for (int id : unit) {
                const auto& n = tree.node(id);
                const S wn = n.prob_total / total;
                for (int c : n.children) {
                    const auto& child = tree.node(c);
                    const S w = wn * child.prob;
                    mean_dl += w * (dec.residual[tree.pos(c)] - dec.residual[tree.pos(id)]);
                    for (std::size_t j = 0; j < d; ++j)
                        mean_ds[j] += w * (child.assets[j] - n.assets[j]);
                }
            }
            out.max_cost_martingale_error =
                std::max(out.max_cost_martingale_error, scalar_to_double(scalar_abs(mean_dl)));
            for (std::size_t j = 0; j < d; ++j) {
                S cov{};
                for (int id : unit) {
                    const auto& n = tree.node(id);
                    const S wn = n.prob_total / total;
                    for (int c : n.children) {
                        const auto& child = tree.node(c);
                        const S w = wn * child.prob;
                        const S dl = dec.residual[tree.pos(c)] - dec.residual[tree.pos(id)];
                        const S dm = child.assets[j] - n.assets[j] - mean_ds[j];
                        cov += w * dl * dm;
                    }
                }
                out.max_orthogonality_error =
                    std::max(out.max_orthogonality_error, scalar_to_double(scalar_abs(cov)));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force optimality

struct BruteForceReport {
    bool martingale_assets = false;
    bool cost_martingale_ok = false;
    bool orthogonality_ok = false;
    bool minimality_ok = false;
    double max_cost_martingale_error = 0.0;
    double max_orthogonality_error = 0.0;
    // Most negative risk excess R(perturbed) - R(candidate) over all nodes
    // and perturbations; optimality requires it nonnegative.
    double min_risk_margin = 0.0;
    int first_minimality_failure_node = -1;
    bool pass = false;
};

namespace lab_detail {

// Conditional variance at `node` of claim minus downstream gains of xi.
template <typename S>
void risk_from(const TreeModel<S>& tree, int id, const TreeVectorProcess<S>& xi,
               const std::vector<S>& claim_by_pos, S& mean, S& second) {
    // depth-first accumulation of E[X|node], E[X^2|node] where
    // X(leaf) = claim - sum_{steps below node} xi . dS.
    struct Frame {
        int id;
        S weight;
        S gains;
    };
    mean = S{};
    second = S{};
    std::vector<Frame> stack{{id, scalar_from_int(1, S{}), S{}}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const auto& n = tree.node(f.id);
        if (n.children.empty()) {
            const S x = claim_by_pos[tree.pos(f.id)] - f.gains;
            mean += f.weight * x;
            second += f.weight * x * x;
            continue;
        }
        for (int c : n.children) {
            const auto& child = tree.node(c);
            S gain{};
            for (std::size_t j = 0; j < n.assets.size(); ++j)
                gain += xi[tree.pos(f.id)][j] * (child.assets[j] - n.assets[j]);
            stack.push_back({c, f.weight * child.prob, f.gains + gain});
        }
    }
}

}  // namespace lab_detail

// Exhaustively verifies the three optimality properties of a candidate
// decomposition on a small tree with drift-free assets: (a) the cost is a
// martingale, (b) the residual cost is orthogonal to every gains process of
// a spanning set of predictable perturbations, (c) no perturbed strategy
// with the same terminal value achieves lower risk at any node. Guarded
// against combinatorial blowup (at most 4 steps, 4 branches per node).
template <typename S>
BruteForceReport brute_force_optimality(const TreeModel<S>& tree,
                                        const std::vector<S>& claim_leaves,
                                        const TreeDecomposition<S>& candidate,
                                        std::size_t n_random_perturbations = 20,
                                        std::uint64_t seed = 1234) {
    if (tree.n_levels() > 5)
        throw std::invalid_argument("brute_force_optimality: more than 4 steps");
    for (const auto& n : tree.nodes)
        if (n.children.size() > 4)
            throw std::invalid_argument("brute_force_optimality: more than 4 branches");

    const std::size_t d = tree.n_assets();
    const std::size_t last = tree.n_levels() - 1;
    const double tol = 1e-12;
    BruteForceReport report;

    // assets must be drift-free for the risk comparison below to be exact
    report.martingale_assets = true;
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l)
        for (int id : tree.level(l)) {
            const auto& n = tree.node(id);
            for (std::size_t j = 0; j < d; ++j) {
                S drift{};
                for (int c : n.children)
                    drift += tree.node(c).prob * (tree.node(c).assets[j] - n.assets[j]);
                if (scalar_to_double(scalar_abs(drift)) > tol) report.martingale_assets = false;
            }
        }

    const auto checks = check_decomposition(tree, claim_leaves, candidate, false);
    report.max_cost_martingale_error = checks.max_cost_martingale_error;
    report.cost_martingale_ok = checks.max_cost_martingale_error <= tol;

    std::vector<S> claim_by_pos(tree.nodes.size(), S{});
    const auto& leaves = tree.level(last);
    for (std::size_t k = 0; k < leaves.size(); ++k)
        claim_by_pos[tree.pos(leaves[k])] = claim_leaves[k];

    // (b): spanning perturbations are indicators of one (left node m, asset k)
    // step; the residual cost from any node n upstream of m must be
    // uncorrelated with their gains.
    double worst_orth = 0.0;
    for (std::size_t lm = 0; lm + 1 < tree.n_levels(); ++lm) {
        for (int m : tree.level(lm)) {
            for (std::size_t k = 0; k < d; ++k) {
                for (std::size_t ln = 0; ln <= lm; ++ln) {
                    for (int nid : tree.level(ln)) {
                        // E[(C_T - C_t) * gains | n]: walk the subtree below n.
                        S acc{};
                        struct Frame {
                            int id;
                            S weight;
                            S gains;
                        };
                        std::vector<Frame> stack{{nid, scalar_from_int(1, S{}), S{}}};
                        while (!stack.empty()) {
                            Frame f = stack.back();
                            stack.pop_back();
                            const auto& nn = tree.node(f.id);
                            if (nn.children.empty()) {
                                const S dc = candidate.cost[tree.pos(f.id)] - candidate.cost[tree.pos(nid)];
                                acc += f.weight * dc * f.gains;
                                continue;
                            }
                            for (int c : nn.children) {
                                const auto& child = tree.node(c);
                                S g = f.gains;
                                if (f.id == m)
                                    g += child.assets[k] - nn.assets[k];
                                stack.push_back({c, f.weight * child.prob, g});
                            }
                        }
                        worst_orth = std::max(worst_orth, scalar_to_double(scalar_abs(acc)));
                    }
                }
            }
        }
    }
    report.max_orthogonality_error = worst_orth;
    report.orthogonality_ok = worst_orth <= tol;

    // (c): random bounded predictable perturbations; perturbed strategies are
    // completed with their optimal value process, so their risk at a node is
    // the conditional variance of the unexplained remainder.
    RngStream rng(seed, 0);
    report.min_risk_margin = 0.0;
    report.minimality_ok = true;
    for (std::size_t trial = 0; trial < n_random_perturbations; ++trial) {
        TreeVectorProcess<S> xi_pert = candidate.xi;
        for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l)
            for (int id : tree.level(l))
                for (std::size_t j = 0; j < d; ++j) {
                    // steps of 1/16 keep the perturbation exactly representable
                    const int grid16 =
                        static_cast<int>(rng.next_u32() % 33) - 16;  // in [-16, 16]
                    xi_pert[tree.pos(id)][j] +=
                        scalar_from_int(grid16, S{}) / scalar_from_int(16, S{});
                }
        for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
            for (int id : tree.level(l)) {
                S mean_c{}, second_c{}, mean_p{}, second_p{};
                lab_detail::risk_from(tree, id, candidate.xi, claim_by_pos, mean_c, second_c);
                lab_detail::risk_from(tree, id, xi_pert, claim_by_pos, mean_p, second_p);
                const S risk_c = second_c - mean_c * mean_c;
                const S risk_p = second_p - mean_p * mean_p;
                const double margin = scalar_to_double(risk_p - risk_c);
                if (margin < report.min_risk_margin) {
                    report.min_risk_margin = margin;
                    report.first_minimality_failure_node = id;
                }
            }
        }
    }
    report.minimality_ok = report.min_risk_margin >= -tol;
    report.pass = report.martingale_assets && report.cost_martingale_ok &&
                  report.orthogonality_ok && report.minimality_ok;
    return report;
}

// Per-node risk profile of an arbitrary strategy (conditional variance of the
// unexplained remainder); used by the perturbation counterexample tests.
template <typename S>
TreeProcess<S> strategy_risk(const TreeModel<S>& tree, const std::vector<S>& claim_leaves,
                             const TreeVectorProcess<S>& xi) {
    const std::size_t last = tree.n_levels() - 1;
    std::vector<S> claim_by_pos(tree.nodes.size(), S{});
    const auto& leaves = tree.level(last);
    for (std::size_t k = 0; k < leaves.size(); ++k)
        claim_by_pos[tree.pos(leaves[k])] = claim_leaves[k];
    TreeProcess<S> out(tree.nodes.size(), S{});
    for (const auto& n : tree.nodes) {
        S mean{}, second{};
        lab_detail::risk_from(tree, n.id, xi, claim_by_pos, mean, second);
        out[tree.pos(n.id)] = second - mean * mean;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Predictable projection and incomplete information

// Projection of a fine-predictable process (values on left nodes) onto the
// coarse filtration: on each label atom the probability-weighted average.
template <typename S>
TreeVectorProcess<S> predictable_projection(const TreeModel<S>& tree,
                                            const TreeVectorProcess<S>& fine) {
    if (fine.size() != tree.nodes.size())
        throw std::invalid_argument("predictable_projection: size mismatch");
    const std::size_t d = fine.empty() ? 0 : fine[tree.pos(tree.root())].size();
    TreeVectorProcess<S> out(tree.nodes.size(), std::vector<S>(d, S{}));
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (const auto& atom : tree.atoms(l)) {
            S total{};
            for (int id : atom) total += tree.node(id).prob_total;
            std::vector<S> proj(d, S{});
            for (int id : atom) {
                const S w = tree.node(id).prob_total / total;
                for (std::size_t j = 0; j < d; ++j) proj[j] += w * fine[tree.pos(id)][j];
            }
            for (int id : atom) out[tree.pos(id)] = proj;
        }
    }
    return out;
}

template <typename S>
struct IncompleteInfoReport {
    bool attainable = false;
    S h0_tilde{};
    S h0{};
    TreeVectorProcess<S> xi_tilde;      // fine replicating strategy
    TreeVectorProcess<S> xi_projected;  // its coarse predictable projection
    TreeVectorProcess<S> xi_fs;         // covariance-weighted coarse optimum
    TreeProcess<S> residual;            // L_t = E[L_T | F_t]
    double max_decomposition_error = 0.0;
    double l0_abs = 0.0;
    double max_l_martingale_error = 0.0;
    double max_orth_error_projected = 0.0;
    double max_orth_error_fs = 0.0;
    double max_jensen_violation = 0.0;
    double strategy_gap = 0.0;  // max |xi_projected - xi_fs|
    bool strategies_coincide = false;
};

// Verifies the projection route to a coarse-information decomposition of a
// finely attainable claim: replicate under the fine filtration, project the
// strategy, and test the residual for the martingale, null-at-zero and
// orthogonality properties. Also reports the covariance-weighted coarse
// optimum; the two strategies coincide exactly when one-step conditional
// covariances do not vary across the fine nodes of a coarse atom, and the
// orthogonality of the projected residual can genuinely fail otherwise --
// both are reported, neither is hidden.
template <typename S>
IncompleteInfoReport<S> verify_incomplete_info(const TreeModel<S>& tree,
                                               const std::vector<S>& claim_leaves) {
    const std::size_t d = tree.n_assets();
    const std::size_t last = tree.n_levels() - 1;
    IncompleteInfoReport<S> report;

    // fine replication; the claim must be attainable under full information
    const TreeDecomposition<S> fine = fs_decompose(tree, claim_leaves, false);
    double fine_residual = 0.0;
    for (const auto& v : fine.residual)
        fine_residual = std::max(fine_residual, scalar_to_double(scalar_abs(v)));
    report.attainable = fine_residual <= 1e-12;
    if (!report.attainable)
        throw std::invalid_argument(
            "verify_incomplete_info: claim not attainable under the fine filtration");

    report.h0_tilde = fine.h0;
    report.h0 = fine.h0;  // single root: E[h0_tilde | F_0] = h0_tilde
    report.xi_tilde = fine.xi;
    report.xi_projected = predictable_projection(tree, fine.xi);

    // L_T per leaf and its coarse conditional-expectation path
    std::vector<S> node_mean(tree.nodes.size(), S{});
    const auto& leaves = tree.level(last);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        S acc = claim_leaves[k] - report.h0;
        int cur = leaves[k];
        while (tree.node(cur).parent >= 0) {
            const auto& n = tree.node(cur);
            const auto& par = tree.node(n.parent);
            for (std::size_t j = 0; j < d; ++j)
                acc -= report.xi_projected[tree.pos(n.parent)][j] * (n.assets[j] - par.assets[j]);
            cur = n.parent;
        }
        node_mean[tree.pos(leaves[k])] = acc;
    }
    for (std::size_t l = last; l-- > 0;)
        for (int id : tree.level(l)) {
            const auto& n = tree.node(id);
            S acc{};
            for (int c : n.children) acc += tree.node(c).prob * node_mean[tree.pos(c)];
            node_mean[tree.pos(id)] = acc;
        }
    report.residual.assign(tree.nodes.size(), S{});
    for (std::size_t l = 0; l < tree.n_levels(); ++l) {
        for (const auto& atom : tree.atoms(l)) {
            S total{};
            for (int id : atom) total += tree.node(id).prob_total;
            S val{};
            for (int id : atom) val += tree.node(id).prob_total / total * node_mean[tree.pos(id)];
            for (int id : atom) report.residual[tree.pos(id)] = val;
        }
    }
    report.l0_abs = scalar_to_double(scalar_abs(report.residual[tree.pos(tree.root())]));

    // terminal identity: claim = h0 + sum xi_projected . dS + L_T (leafwise,
    // with L_T the leaf-level residual)
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        const S err = node_mean[tree.pos(leaves[k])] - report.residual[tree.pos(leaves[k])];
        report.max_decomposition_error =
            std::max(report.max_decomposition_error, scalar_to_double(scalar_abs(err)));
    }

    // martingale property of L and orthogonality to the coarse martingale
    // parts of the assets
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l) {
        for (const auto& atom : tree.atoms(l)) {
            S total{};
            for (int id : atom) total += tree.node(id).prob_total;
            std::vector<S> mean_ds(d, S{});
            S mean_dl{};
            for (int id : atom) {
                const auto& n = tree.node(id);
                const S wn = n.prob_total / total;
                for (int c : n.children) {
                    const auto& child = tree.node(c);
                    const S w = wn * child.prob;
                    mean_dl += w * (report.residual[tree.pos(c)] - report.residual[tree.pos(id)]);
                    for (std::size_t j = 0; j < d; ++j)
                        mean_ds[j] += w * (child.assets[j] - n.assets[j]);
                }
            }
            report.max_l_martingale_error =
                std::max(report.max_l_martingale_error, scalar_to_double(scalar_abs(mean_dl)));
            for (std::size_t j = 0; j < d; ++j) {
                S cov{};
                for (int id : atom) {
                    const auto& n = tree.node(id);
                    const S wn = n.prob_total / total;
                    for (int c : n.children) {
                        const auto& child = tree.node(c);
                        const S w = wn * child.prob;
                        const S dl = report.residual[tree.pos(c)] - report.residual[tree.pos(id)];
                        const S dm = child.assets[j] - n.assets[j] - mean_ds[j];
                        cov += w * dl * dm;
                    }
                }
                report.max_orth_error_projected =
                    std::max(report.max_orth_error_projected, scalar_to_double(scalar_abs(cov)));
            }
        }
    }

    // covariance-weighted coarse optimum for comparison
    const TreeDecomposition<S> coarse_fs = fs_decompose(tree, claim_leaves, true);
    report.xi_fs = coarse_fs.xi;
    const auto fs_checks = check_decomposition(tree, claim_leaves, coarse_fs, true);
    report.max_orth_error_fs = fs_checks.max_orthogonality_error;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            report.strategy_gap = std::max(
                report.strategy_gap,
                scalar_to_double(scalar_abs(report.xi_projected[i][j] - report.xi_fs[i][j])));
    report.strategies_coincide = report.strategy_gap <= 1e-12;

    // Jensen: (projection)^2 <= projection of the square, atom by atom
    TreeVectorProcess<S> xi_sq(tree.nodes.size(), std::vector<S>(d, S{}));
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) xi_sq[i][j] = fine.xi[i][j] * fine.xi[i][j];
    const TreeVectorProcess<S> proj_sq = predictable_projection(tree, xi_sq);
    for (std::size_t l = 0; l + 1 < tree.n_levels(); ++l)
        for (int id : tree.level(l))
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t i = tree.pos(id);
                const double gap = scalar_to_double(
                    report.xi_projected[i][j] * report.xi_projected[i][j] - proj_sq[i][j]);
                report.max_jensen_violation = std::max(report.max_jensen_violation, gap);
            }
    return report;
}

}  // namespace benchhedge
