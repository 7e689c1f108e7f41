#ifndef TTN_TREE_ADAPTATION_HPP
#define TTN_TREE_ADAPTATION_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ttn/learner.hpp"

namespace ttn {

/// Estimated epsilon-rank of a variable group, with the evaluation cost spent
/// on it.
struct RankEstimate {
    NodeSet alpha;
    int rank = 1;
    std::int64_t cost = 0;
    double eps = 0.0;
    bool coarse = false;  // caps reached before the tolerance was met
};

struct RankEstimationParams {
    double eps_coarse = 1e-2;
    int n_alpha = 30;       // row sample size
    int n_complement = 30;  // column cap
};

/// Estimate the alpha-rank of u at coarse tolerance eps_c from an evaluation
/// matrix B with z_alpha i.i.d. mu_alpha rows and adaptively grown
/// mu-complement columns: grow the rank while the leave-one-out error
/// sqrt(E(r)) exceeds eps_c, adding columns when the current count limits the
/// rank. Each E(k) is computed once, at the smallest column count allowing
/// rank k.
inline RankEstimate estimate_rank(const Oracle& u, const NodeSet& alpha,
                                  const ProductMeasure& mu,
                                  const RankEstimationParams& params, Rng& rng) {
    if (params.eps_coarse <= 0.0)
        throw std::invalid_argument("estimate_rank: tolerance must be positive");
    if (params.n_alpha < 1 || params.n_complement < 1)
        throw std::invalid_argument("estimate_rank: caps must be >= 1");
    const std::int64_t count0 = u.count();
    NodeSet avars = alpha;
    std::sort(avars.begin(), avars.end());
    NodeSet cvars;
    for (int v = 1; v <= mu.dimension(); ++v)
        if (!std::binary_search(avars.begin(), avars.end(), v)) cvars.push_back(v);

    const int z = params.n_alpha;
    std::vector<Eigen::VectorXd> rows(z);
    for (int i = 0; i < z; ++i) rows[i] = detail::draw_at(mu, avars, rng);

    auto eval_column = [&](Eigen::MatrixXd& B, int col) {
        Eigen::VectorXd y = detail::draw_at(mu, cvars, rng);
        for (int i = 0; i < z; ++i) B(i, col) = u(Eigen::VectorXd(rows[i] + y));
    };

    Eigen::MatrixXd B(z, 1);
    eval_column(B, 0);
    int zc = 1;
    int r = 0;
    std::vector<double> loo_by_rank;  // sqrt of the energy ratio, index r-1
    double err = std::numeric_limits<double>::infinity();
    while (err > params.eps_coarse && zc < params.n_complement) {
        B.conservativeResize(Eigen::NoChange, zc + 1);
        eval_column(B, zc);
        ++zc;
        if (B.squaredNorm() <= 0.0) {
            err = 0.0;
            loo_by_rank.assign(1, 0.0);
            r = 1;
            break;
        }
        while (err > params.eps_coarse && r < std::min(z, zc - 1)) {
            ++r;
            err = std::sqrt(loo_error(B, r));
            loo_by_rank.push_back(err);
        }
    }

    RankEstimate out;
    out.alpha = avars;
    out.eps = params.eps_coarse;
    out.cost = u.count() - count0;
    out.rank = std::max(1, r);
    out.coarse = true;
    for (std::size_t k = 0; k < loo_by_rank.size(); ++k) {
        if (loo_by_rank[k] <= params.eps_coarse) {
            out.rank = static_cast<int>(k) + 1;
            out.coarse = false;
            break;
        }
    }
    return out;
}

/// Memoized rank estimates keyed by variable set; an estimate is computed at
/// most once per group. Evaluations spent here are the tree-search overhead
/// n_optim.
class RankEstimateCache {
public:
    RankEstimateCache(const Oracle& u, const ProductMeasure& mu,
                      RankEstimationParams params)
        : u_(&u), mu_(&mu), params_(params) {}

    const RankEstimate& get(const NodeSet& alpha, Rng& rng) {
        NodeSet key = alpha;
        std::sort(key.begin(), key.end());
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        RankEstimate est = estimate_rank(*u_, key, *mu_, params_, rng);
        n_optim_ += est.cost;
        return cache_.emplace(std::move(key), std::move(est)).first->second;
    }

    std::int64_t n_optim() const { return n_optim_; }

private:
    const Oracle* u_;
    const ProductMeasure* mu_;
    RankEstimationParams params_;
    std::map<NodeSet, RankEstimate> cache_;
    std::int64_t n_optim_ = 0;
};

/// A pairing of the current groups: partner[i] is the index of the group
/// paired with group i, or -1 for the single passed-through group when the
/// group count is odd.
struct Pairing {
    std::vector<int> partner;

    int passthrough() const {
        for (std::size_t i = 0; i < partner.size(); ++i)
            if (partner[i] < 0) return static_cast<int>(i);
        return -1;
    }
};

inline NodeSet merged_pair(const NodeSet& a, const NodeSet& b) {
    NodeSet out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
}

/// Uniformly random pairing of the groups (odd counts leave one group
/// unpaired).
inline Pairing random_pairing(int count, Rng& rng) {
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    for (int i = count - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<int>(rng.below(i + 1))]);
    Pairing p;
    p.partner.assign(count, -1);
    for (int i = 0; i + 1 < count; i += 2) {
        p.partner[order[i]] = order[i + 1];
        p.partner[order[i + 1]] = order[i];
    }
    return p;
}

/// Local pairing cost: sum over the formed pairs of the estimated parent rank
/// times the product of the estimated member ranks. A passed-through group
/// creates no interior node and contributes nothing.
inline std::int64_t pairing_cost(const Pairing& pairing,
                                 const std::vector<NodeSet>& lambda,
                                 RankEstimateCache& cache, Rng& rng) {
    std::int64_t cost = 0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        int j = pairing.partner[i];
        if (j < 0 || static_cast<int>(i) > j) continue;
        const RankEstimate& parent = cache.get(merged_pair(lambda[i], lambda[j]), rng);
        const RankEstimate& left = cache.get(lambda[i], rng);
        const RankEstimate& right = cache.get(lambda[j], rng);
        cost += static_cast<std::int64_t>(parent.rank) * left.rank * right.rank;
    }
    return cost;
}

struct PairingParams {
    double gamma1 = 6.0;
    double gamma2 = 6.0;
    int n_p = 0;  // 0: use 2d swap proposals
};

/// Propose two groups to exchange between their pairs: nu1 is drawn over the
/// groups with probability proportional to its parent rank to the power
/// gamma1, nu2 over the remaining groups (excluding nu1 and its partner) with
/// exponent gamma2. Requires at least 3 groups, otherwise no swap can change
/// the pairing.
inline std::pair<int, int> propose_swap(const Pairing& pairing,
                                        const std::vector<NodeSet>& lambda,
                                        RankEstimateCache& cache,
                                        const PairingParams& params, Rng& rng) {
    const int count = static_cast<int>(lambda.size());
    if (count < 3)
        throw std::invalid_argument("propose_swap: needs at least 3 groups");

    auto parent_rank = [&](int i) {
        int j = pairing.partner[i];
        if (j < 0) return cache.get(lambda[i], rng).rank;
        return cache.get(merged_pair(lambda[i], lambda[j]), rng).rank;
    };

    auto draw_index = [&](const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double t = rng.uniform01() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            t -= weights[i];
            if (t < 0.0) return static_cast<int>(i);
        }
        for (int i = count - 1; i >= 0; --i)
            if (weights[i] > 0.0) return i;
        return 0;
    };

    std::vector<double> w1(count);
    for (int i = 0; i < count; ++i)
        w1[i] = std::pow(static_cast<double>(parent_rank(i)), params.gamma1);
    int nu1 = draw_index(w1);

    std::vector<double> w2(count, 0.0);
    for (int i = 0; i < count; ++i) {
        if (i == nu1 || i == pairing.partner[nu1]) continue;
        w2[i] = std::pow(static_cast<double>(parent_rank(i)), params.gamma2);
    }
    int nu2 = draw_index(w2);
    return {nu1, nu2};
}

/// Exchange the pair positions of groups i and j.
inline Pairing swapped(Pairing pairing, int i, int j) {
    int pi = pairing.partner[i];
    int pj = pairing.partner[j];
    if (pi == j) return pairing;
    if (pi >= 0) pairing.partner[pi] = j;
    if (pj >= 0) pairing.partner[pj] = i;
    std::swap(pairing.partner[i], pairing.partner[j]);
    return pairing;
}

/// Stochastic minimization of the local pairing cost: start from a random
/// pairing and perform n_p proposed swaps, accepting whenever the cost does
/// not increase. Rank estimates are cached, so each candidate pair is
/// estimated at most once.
inline Pairing optimize_pairing(const std::vector<NodeSet>& lambda,
                                RankEstimateCache& cache, const PairingParams& params,
                                int n_p, Rng& rng) {
    const int count = static_cast<int>(lambda.size());
    if (count < 2)
        throw std::invalid_argument("optimize_pairing: needs at least 2 groups");
    Pairing current = random_pairing(count, rng);
    if (count == 2) return current;
    std::int64_t cost = pairing_cost(current, lambda, cache, rng);
    for (int k = 0; k < n_p; ++k) {
        auto [nu1, nu2] = propose_swap(current, lambda, cache, params, rng);
        Pairing candidate = swapped(current, nu1, nu2);
        std::int64_t candidate_cost = pairing_cost(candidate, lambda, cache, rng);
        if (candidate_cost <= cost) {
            current = std::move(candidate);
            cost = candidate_cost;
        }
    }
    return current;
}

struct AdaptiveLearnConfig {
    LearnerConfig learner;
    RankEstimationParams rank_estimation;
    PairingParams pairing;
};

struct AdaptiveLearnResult {
    DimensionTree tree;
    TreeTensorNetwork network;
    LearnReport report;
    std::int64_t n = 0;        // approximation evaluations
    std::int64_t n_optim = 0;  // rank-estimation evaluations
    std::int64_t n_total = 0;
    /// Union sets of the pairs chosen at each level, leaves first.
    std::vector<std::vector<NodeSet>> level_pairings;
};

/// Leaves-to-root construction of the dimension tree interleaved with the
/// subspace estimation: starting from the singletons, estimate the principal
/// subspace of every current group, then pair the groups by stochastic local
/// cost optimization, until two groups remain and the root projection closes
/// the network. Tree-search evaluations are accounted separately in n_optim.
inline AdaptiveLearnResult learn_with_tree_adaptation(
    const Oracle& u, const std::vector<LeafSpaceSequence>& sequences,
    const AdaptiveLearnConfig& config, Rng& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    const int d = static_cast<int>(sequences.size());
    if (d < 2)
        throw std::invalid_argument("learn_with_tree_adaptation: needs d >= 2");

    std::vector<MarginalMeasure> marginals;
    marginals.reserve(d);
    for (const auto& s : sequences) marginals.push_back(s.measure);
    ProductMeasure mu(std::move(marginals));

    const LearnerConfig& lc = config.learner;
    RankEstimateCache cache(u, mu, config.rank_estimation);
    int n_p = config.pairing.n_p > 0 ? config.pairing.n_p : 2 * d;

    // Conservative budgets: the final level of a node is unknown while the
    // tree is being built, so every node gets the capped-level budget over an
    // upper bound of the final node count.
    const double c1 = quasi_optimality_constant(lc.stability, lc.heuristic_constant);
    const double node_bound = 2.0 * d - 1.0;
    double tol_pca = lc.tolerance /
                     std::sqrt(std::pow(2.0 * c1, lc.level_cap) * node_bound);
    double tol_dis = lc.tolerance /
                     std::sqrt(0.5 * std::pow(2.0 * c1, lc.level_cap + 1) * d);
    tol_pca = std::max(tol_pca, lc.numeric_floor);
    tol_dis = std::max(tol_dis, lc.numeric_floor);

    std::vector<NodeSet> lambda;
    std::vector<NodeSet> tree_nodes;
    for (int nu = 1; nu <= d; ++nu) {
        lambda.push_back({nu});
        tree_nodes.push_back({nu});
    }

    std::map<NodeSet, Eigen::MatrixXd> factor_by_node;
    std::vector<LeafBasis> leaf_bases(d);
    std::vector<std::shared_ptr<LeafSampler>> leaf_samplers(d);

    AdaptiveLearnResult result;
    LearnReport& report = result.report;
    const std::int64_t count0 = u.count();

    DimensionTree tree;
    std::vector<Eigen::MatrixXd> factors;
    auto rebuild_tree = [&]() {
        std::vector<NodeSet> nodes = tree_nodes;
        NodeSet root(d);
        std::iota(root.begin(), root.end(), 1);
        if (std::find(nodes.begin(), nodes.end(), root) == nodes.end())
            nodes.push_back(root);
        tree = DimensionTree::validate(std::move(nodes));
        factors.assign(tree.node_count(), Eigen::MatrixXd());
        for (const auto& [vars, factor] : factor_by_node) {
            int id = tree.find(vars);
            if (id >= 0) factors[id] = factor;
        }
    };

    while (true) {
        rebuild_tree();
        NetworkRef net{&tree, &leaf_bases, &factors};
        for (const NodeSet& vars : lambda) {
            if (factor_by_node.count(vars)) continue;
            const std::int64_t node_count0 = u.count();
            int id = tree.find(vars);
            NodeReport node;
            node.vars = vars;
            PcaOptions pca;
            pca.k_pca = lc.k_pca;
            pca.adaptive = lc.adaptive_pca;
            pca.tol_energy = tol_pca * tol_pca;
            node.tol_energy = pca.tol_energy;

            NodeSet complement = tree.complement(id);
            auto draw_complement = [&mu, complement](Rng& r) {
                return detail::draw_at(mu, complement, r);
            };

            PrincipalSubspace subspace;
            if (vars.size() == 1) {
                int nu = vars[0];
                WeightedSampleSet sample;
                std::vector<Eigen::VectorXd> initial_columns;
                Eigen::MatrixXd initial_values;
                if (lc.adaptive_basis) {
                    LeafAdaptation adapted = adapt_leaf_basis(
                        u, nu, sequences[nu - 1], tol_dis, lc.stability, mu, rng);
                    leaf_bases[nu - 1] = adapted.basis;
                    leaf_samplers[nu - 1] = adapted.sampler;
                    sample = std::move(adapted.sample);
                    initial_columns.push_back(adapted.first_complement);
                    initial_values = adapted.coefficients;
                    node.tolerance_met = adapted.tolerance_met;
                    node.degree = adapted.degree;
                } else {
                    leaf_bases[nu - 1] = sequences[nu - 1].basis(lc.fixed_degree);
                    leaf_samplers[nu - 1] =
                        std::make_shared<LeafSampler>(leaf_bases[nu - 1]);
                    node.degree = lc.fixed_degree;
                }
                ProjectionSpace space =
                    make_projection_space(*leaf_samplers[nu - 1], nu, d);
                if (sample.size() == 0)
                    sample = detail::stable_subsampled(space, lc.stability, rng);
                node.certificate = sample.certificate;
                node.z = sample.size();
                node.m = space.dimension;
                subspace = adaptive_principal_subspace(u, space, sample, draw_complement,
                                                       pca, rng, initial_columns,
                                                       initial_values);
            } else {
                ProjectionSpace space = make_projection_space(net, id);
                WeightedSampleSet sample =
                    detail::stable_subsampled(space, lc.stability, rng);
                node.certificate = sample.certificate;
                node.z = sample.size();
                node.m = space.dimension;
                subspace = adaptive_principal_subspace(u, space, sample, draw_complement,
                                                       pca, rng);
            }

            factor_by_node[vars] = subspace.basis;
            factors[id] = subspace.basis;
            node.r = subspace.rank();
            node.z_complement = subspace.z_complement;
            node.loo = subspace.loo;
            node.tail_ratio = subspace.tail_ratio;
            node.tolerance_met = node.tolerance_met && subspace.tolerance_met;
            node.degenerate = subspace.degenerate;
            node.evaluations = u.count() - node_count0;
            report.tolerance_met = report.tolerance_met && node.tolerance_met;
            report.degenerate = report.degenerate || node.degenerate;
            report.nodes.push_back(std::move(node));
        }

        if (static_cast<int>(lambda.size()) <= 2) break;

        Pairing pairing = optimize_pairing(lambda, cache, config.pairing, n_p, rng);
        std::vector<NodeSet> next;
        std::vector<NodeSet> formed;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            int j = pairing.partner[i];
            if (j < 0) {
                next.push_back(lambda[i]);
            } else if (static_cast<int>(i) < j) {
                NodeSet parent = merged_pair(lambda[i], lambda[j]);
                formed.push_back(parent);
                next.push_back(std::move(parent));
            }
        }
        std::sort(next.begin(), next.end());
        std::sort(formed.begin(), formed.end());
        result.level_pairings.push_back(formed);
        for (const auto& p : formed) tree_nodes.push_back(p);
        lambda = std::move(next);
    }

    // Root projection on the product of the two remaining group subspaces.
    {
        rebuild_tree();
        NetworkRef net{&tree, &leaf_bases, &factors};
        const std::int64_t node_count0 = u.count();
        int root = tree.root();
        ProjectionSpace space = make_projection_space(net, root);
        WeightedSampleSet sample = detail::stable_subsampled(space, lc.stability, rng);
        Eigen::VectorXd values(sample.size());
        for (int i = 0; i < sample.size(); ++i)
            values(i) = u(Eigen::VectorXd(sample.points.row(i).transpose()));
        factors[root] = project(space, sample, values);

        NodeReport node;
        node.vars = tree.node(root);
        node.m = space.dimension;
        node.r = 1;
        node.z = sample.size();
        node.certificate = sample.certificate;
        node.evaluations = u.count() - node_count0;
        report.nodes.push_back(std::move(node));
    }

    result.network = TreeTensorNetwork(tree, leaf_bases, factors);
    result.tree = tree;
    result.n_optim = cache.n_optim();
    result.n_total = u.count() - count0;
    result.n = result.n_total - result.n_optim;
    report.evaluations = result.n;
    report.storage = result.network.storage();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace ttn

#endif
