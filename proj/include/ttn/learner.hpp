#ifndef TTN_LEARNER_HPP
#define TTN_LEARNER_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ttn/principal_subspaces.hpp"
#include "ttn/tensor_network.hpp"

namespace ttn {

/// Nested family of candidate leaf spaces: orthonormal polynomial bases of
/// degrees 1..max_degree (each a prefix of the next).
struct LeafSpaceSequence {
    PolyFamily family = PolyFamily::Legendre;
    MarginalMeasure measure = MarginalMeasure::uniform(-1.0, 1.0);
    int max_degree = 15;

    LeafBasis basis(int degree) const { return LeafBasis(family, degree, measure); }
};

struct LearnerConfig {
    double tolerance = 1e-8;
    StabilityParams stability;
    int k_pca = 3;
    bool adaptive_pca = true;
    bool adaptive_basis = true;
    int fixed_degree = 3;  // used when adaptive_basis is off
    int level_cap = 3;
    /// Use the practical quasi-optimality constant (no-repetition,
    /// no-subsampling projection) instead of the formal one.
    bool heuristic_constant = true;
    /// Relative tolerances are never demanded below this; budgets derived
    /// from tolerances near 1e-14 would otherwise fall under the attainable
    /// double-precision resolution of the least-squares and SVD kernels.
    double numeric_floor = 64.0 * std::numeric_limits<double>::epsilon();
};

/// gamma of the boosted projection with M repetitions.
inline double gamma_repetition(const StabilityParams& p) {
    return 1.0 / ((1.0 - p.delta) * (1.0 - std::pow(p.eta, p.repetitions))) * p.repetitions;
}

/// gamma variant including the subsampling proportion p_r.
inline double gamma_with_keep(const StabilityParams& p, double keep_fraction) {
    return keep_fraction * gamma_repetition(p);
}

/// Quasi-optimality constant C1 amplifying per-node errors in the budgets.
inline double quasi_optimality_constant(const StabilityParams& p, bool heuristic) {
    if (heuristic)
        return 2.0 * (1.0 + 1.0 / ((1.0 - p.delta) * (1.0 - p.eta)));
    return 2.0 * (1.0 + gamma_repetition(p));
}

struct NodeBudget {
    double pca = 0.0;  // tolerance on the subspace reconstruction error
    double dis = 0.0;  // tolerance on the leaf discretization error
};

/// Per-node tolerances splitting a global budget epsilon across the tree:
/// eps_pca(a)^2 = eps^2 / ((2C1)^l (#T-1)) and
/// eps_dis(a)^2 = eps^2 / (0.5 (2C1)^{l+1} d), with the level capped.
inline std::vector<NodeBudget> tolerance_budget(double epsilon, const DimensionTree& tree,
                                                const LearnerConfig& config) {
    const double c1 = quasi_optimality_constant(config.stability, config.heuristic_constant);
    const double nodes = tree.node_count() - 1;
    std::vector<NodeBudget> budgets(tree.node_count());
    for (int id = 0; id < tree.node_count(); ++id) {
        int level = std::min(tree.level(id), config.level_cap);
        budgets[id].pca = epsilon / std::sqrt(std::pow(2.0 * c1, level) * nodes);
        budgets[id].dis = epsilon / std::sqrt(0.5 * std::pow(2.0 * c1, level + 1) *
                                              tree.dimension());
    }
    return budgets;
}

struct NodeReport {
    NodeSet vars;
    int m = 0;
    int r = 0;
    int z = 0;
    int z_complement = 0;
    std::int64_t evaluations = 0;
    double loo = std::numeric_limits<double>::quiet_NaN();
    double tail_ratio = 0.0;
    double certificate = 0.0;
    double tol_energy = 0.0;
    bool tolerance_met = true;
    bool degenerate = false;
    int degree = -1;  // leaf basis degree, -1 for interior nodes
};

struct LearnReport {
    std::vector<NodeReport> nodes;
    std::int64_t evaluations = 0;  // n
    std::int64_t storage = 0;
    double wall_seconds = 0.0;
    bool tolerance_met = true;
    bool degenerate = false;
};

struct LearnResult {
    TreeTensorNetwork network;
    LearnReport report;
};

namespace detail {

/// Zero-filled d-vector with fresh mu-draws at the given coordinates.
inline Eigen::VectorXd draw_at(const ProductMeasure& mu, const NodeSet& vars, Rng& rng) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(mu.dimension());
    for (int nu : vars) x(nu - 1) = mu.marginal(nu).sample(rng);
    return x;
}

inline int subsample_floor(int m, int n, const StabilityParams& params) {
    if (params.keep_fraction > 0.0)
        return std::max(m, static_cast<int>(std::ceil(params.keep_fraction * n)));
    return m;
}

inline WeightedSampleSet stable_subsampled(const ProjectionSpace& space,
                                           const StabilityParams& params, Rng& rng) {
    int n = std::max(min_sample_count(space.dimension, params.delta, params.eta),
                     space.dimension);
    WeightedSampleSet sample = draw_stable_sample(space, n, params, rng);
    return greedy_subsample(space, std::move(sample), params.delta,
                            subsample_floor(space.dimension, n, params));
}

}  // namespace detail

/// Stopping criterion of the leaf-space selection: magnitude of the trailing
/// coefficient relative to the whole coefficient vector.
inline double trailing_coefficient_ratio(const Eigen::VectorXd& coefficients) {
    double norm = coefficients.norm();
    if (norm <= 0.0) return 0.0;
    return std::abs(coefficients(coefficients.size() - 1)) / norm;
}

/// Result of selecting a leaf space from the nested sequence.
struct LeafAdaptation {
    int degree = 0;
    LeafBasis basis;
    std::shared_ptr<LeafSampler> sampler;
    WeightedSampleSet sample;          // stable sample of the selected space
    Eigen::VectorXd first_complement;  // the complement draw used for selection
    Eigen::VectorXd coefficients;      // projection of u(., y) on the selected space
    bool tolerance_met = true;
};

/// Pick the smallest space in the nested sequence whose projection of one
/// fiber u(., y) has trailing coefficient ratio |a_last| / ||a|| below the
/// discretization tolerance. Each candidate degree draws its own stable
/// sample; the selected degree's sample is returned for reuse.
inline LeafAdaptation adapt_leaf_basis(const Oracle& u, int nu,
                                       const LeafSpaceSequence& sequence,
                                       double tol_dis, const StabilityParams& params,
                                       const ProductMeasure& mu, Rng& rng) {
    NodeSet complement;
    for (int v = 1; v <= mu.dimension(); ++v)
        if (v != nu) complement.push_back(v);
    Eigen::VectorXd y = detail::draw_at(mu, complement, rng);

    LeafAdaptation out;
    for (int degree = 1; degree <= sequence.max_degree; ++degree) {
        out.degree = degree;
        out.basis = sequence.basis(degree);
        out.sampler = std::make_shared<LeafSampler>(out.basis);
        ProjectionSpace space = make_projection_space(*out.sampler, nu, mu.dimension());
        out.sample = detail::stable_subsampled(space, params, rng);
        out.coefficients = project_column(u, space, out.sample, y);
        if (trailing_coefficient_ratio(out.coefficients) <= tol_dis) {
            out.first_complement = y;
            out.tolerance_met = true;
            return out;
        }
    }
    out.first_complement = y;
    out.tolerance_met = false;
    return out;
}

/// Leaf-to-root construction of a tree tensor network approximation of u:
/// for each non-root node, build the boosted least-squares projection on its
/// feature space (the given leaf space, possibly adapted, or the product of
/// the children subspaces), estimate the principal subspace of the projected
/// fibers within the node's budget, and store its coefficient matrix; the
/// root holds the final projection of u onto the product of its children
/// subspaces.
inline LearnResult learn(const Oracle& u, const DimensionTree& tree,
                         const std::vector<LeafSpaceSequence>& sequences,
                         const LearnerConfig& config, Rng& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    const int d = tree.dimension();
    if (static_cast<int>(sequences.size()) != d)
        throw std::invalid_argument("learn: one leaf space sequence per variable required");

    std::vector<MarginalMeasure> marginals;
    marginals.reserve(d);
    for (const auto& s : sequences) marginals.push_back(s.measure);
    ProductMeasure mu(std::move(marginals));

    std::vector<NodeBudget> budgets = tolerance_budget(config.tolerance, tree, config);
    auto floored = [&](double tol) { return std::max(tol, config.numeric_floor); };

    std::vector<LeafBasis> leaf_bases(d);
    std::vector<std::shared_ptr<LeafSampler>> leaf_samplers(d);
    std::vector<Eigen::MatrixXd> factors(tree.node_count());
    NetworkRef net{&tree, &leaf_bases, &factors};

    LearnReport report;
    const std::int64_t count0 = u.count();

    for (int id : tree.nodes_by_decreasing_level()) {
        const std::int64_t node_count0 = u.count();
        NodeReport node;
        node.vars = tree.node(id);
        PcaOptions pca;
        pca.k_pca = config.k_pca;
        pca.adaptive = config.adaptive_pca;
        double tol_pca = floored(budgets[id].pca);
        pca.tol_energy = tol_pca * tol_pca;
        node.tol_energy = pca.tol_energy;

        NodeSet complement = tree.complement(id);
        auto draw_complement = [&mu, complement](Rng& r) {
            return detail::draw_at(mu, complement, r);
        };

        PrincipalSubspace subspace;
        if (tree.is_leaf(id)) {
            int nu = tree.node(id)[0];
            WeightedSampleSet sample;
            std::vector<Eigen::VectorXd> initial_columns;
            Eigen::MatrixXd initial_values;
            if (config.adaptive_basis) {
                LeafAdaptation adapted =
                    adapt_leaf_basis(u, nu, sequences[nu - 1],
                                     floored(budgets[id].dis), config.stability, mu, rng);
                leaf_bases[nu - 1] = adapted.basis;
                leaf_samplers[nu - 1] = adapted.sampler;
                sample = std::move(adapted.sample);
                initial_columns.push_back(adapted.first_complement);
                initial_values = adapted.coefficients;
                node.tolerance_met = adapted.tolerance_met;
                node.degree = adapted.degree;
            } else {
                leaf_bases[nu - 1] = sequences[nu - 1].basis(config.fixed_degree);
                leaf_samplers[nu - 1] = std::make_shared<LeafSampler>(leaf_bases[nu - 1]);
                node.degree = config.fixed_degree;
            }
            ProjectionSpace space =
                make_projection_space(*leaf_samplers[nu - 1], nu, d);
            if (sample.size() == 0)
                sample = detail::stable_subsampled(space, config.stability, rng);
            node.certificate = sample.certificate;
            node.z = sample.size();
            node.m = space.dimension;
            subspace = adaptive_principal_subspace(u, space, sample, draw_complement,
                                                   pca, rng, initial_columns,
                                                   initial_values);
        } else {
            ProjectionSpace space = make_projection_space(net, id);
            WeightedSampleSet sample = detail::stable_subsampled(space, config.stability, rng);
            node.certificate = sample.certificate;
            node.z = sample.size();
            node.m = space.dimension;
            subspace = adaptive_principal_subspace(u, space, sample, draw_complement,
                                                   pca, rng);
        }

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

    // Final projection of u on the product of the root children subspaces.
    {
        const std::int64_t node_count0 = u.count();
        int root = tree.root();
        ProjectionSpace space = make_projection_space(net, root);
        WeightedSampleSet sample = detail::stable_subsampled(space, config.stability, rng);
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

    LearnResult result{TreeTensorNetwork(tree, leaf_bases, factors), std::move(report)};
    result.report.evaluations = u.count() - count0;
    result.report.storage = result.network.storage();
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace ttn

#endif
