#ifndef TTN_TENSOR_NETWORK_HPP
#define TTN_TENSOR_NETWORK_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ttn/bases.hpp"
#include "ttn/dimension_tree.hpp"

namespace ttn {

/// Per-node ranks r_alpha with the convention r_D = 1 at the root.
class RankTuple {
public:
    RankTuple() = default;
    explicit RankTuple(const DimensionTree& tree) : ranks_(tree.node_count(), 1) {}

    int& operator[](int id) { return ranks_[id]; }
    int operator[](int id) const { return ranks_[id]; }
    int size() const { return static_cast<int>(ranks_.size()); }

    void check(const DimensionTree& tree) const {
        if (size() != tree.node_count())
            throw std::invalid_argument("ranks: wrong number of entries");
        for (int r : ranks_)
            if (r < 1) throw std::invalid_argument("ranks: every rank must be >= 1");
        if (ranks_[tree.root()] != 1)
            throw std::invalid_argument("ranks: root rank must be 1");
    }

private:
    std::vector<int> ranks_;
};

/// Kronecker product of a list of vectors, first factor slowest:
/// out[((i1*n2)+i2)*n3+...] = v1[i1]*v2[i2]*...
inline Eigen::VectorXd kron_all(const std::vector<Eigen::VectorXd>& vs) {
    Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
    for (const auto& v : vs) {
        Eigen::VectorXd next(out.size() * v.size());
        for (Eigen::Index i = 0; i < out.size(); ++i)
            next.segment(i * v.size(), v.size()) = out(i) * v;
        out.swap(next);
    }
    return out;
}

/// 𝑆(r,T): total parameter count of the format. leaf_dims maps node id of a
/// leaf to its feature-space dimension m_nu.
inline std::int64_t storage_complexity(const DimensionTree& tree, const RankTuple& ranks,
                                       const std::vector<int>& leaf_dims) {
    ranks.check(tree);
    if (static_cast<int>(leaf_dims.size()) != tree.node_count())
        throw std::invalid_argument("storage_complexity: leaf_dims size mismatch");
    std::int64_t total = 0;
    for (int id = 0; id < tree.node_count(); ++id) {
        if (tree.is_leaf(id)) {
            if (leaf_dims[id] < 1)
                throw std::invalid_argument("storage_complexity: missing leaf dimension");
            total += static_cast<std::int64_t>(ranks[id]) * leaf_dims[id];
        } else {
            std::int64_t prod = 1;
            for (int c : tree.children(id)) prod *= ranks[c];
            total += static_cast<std::int64_t>(ranks[id]) * prod;
        }
    }
    return total;
}

/// A function in tree-based tensor format: per-leaf transfer matrices of shape
/// m_nu x r_nu over the leaf bases, per-interior-node transfer tensors stored
/// matricized as (prod of child ranks) x r_alpha, and a root tensor with
/// r_D = 1. Immutable once built; evaluation is reentrant.
class TreeTensorNetwork {
public:
    TreeTensorNetwork() = default;
    TreeTensorNetwork(DimensionTree tree, std::vector<LeafBasis> leaf_bases,
                      std::vector<Eigen::MatrixXd> factors)
        : tree_(std::move(tree)),
          leaf_bases_(std::move(leaf_bases)),
          factors_(std::move(factors)) {
        check_shapes();
    }

    const DimensionTree& tree() const { return tree_; }
    const LeafBasis& leaf_basis(int nu) const { return leaf_bases_.at(nu - 1); }
    const std::vector<LeafBasis>& leaf_bases() const { return leaf_bases_; }
    const Eigen::MatrixXd& factor(int id) const { return factors_.at(id); }

    int rank(int id) const { return static_cast<int>(factors_[id].cols()); }

    RankTuple ranks() const {
        RankTuple r(tree_);
        for (int id = 0; id < tree_.node_count(); ++id) r[id] = rank(id);
        return r;
    }

    std::int64_t storage() const {
        std::int64_t total = 0;
        for (const auto& f : factors_) total += f.size();
        return total;
    }

    /// Value of the represented function at x in R^d; one leaf-to-root
    /// contraction, cost linear in the parameter count.
    double evaluate(const Eigen::VectorXd& x) const {
        if (x.size() != tree_.dimension())
            throw std::invalid_argument("evaluate: point has wrong dimension");
        std::vector<Eigen::VectorXd> value(tree_.node_count());
        for (int id : tree_.nodes_by_decreasing_level()) {
            if (tree_.is_leaf(id)) {
                int nu = tree_.node(id)[0];
                value[id] = factors_[id].transpose() * leaf_bases_[nu - 1].eval(x(nu - 1));
            } else {
                value[id] = factors_[id].transpose() * child_kron(id, value);
            }
        }
        Eigen::VectorXd root = factors_[tree_.root()].transpose() *
                               child_kron(tree_.root(), value);
        return root(0);
    }

    /// Batch evaluation, one point per row.
    Eigen::VectorXd evaluate_batch(const Eigen::MatrixXd& points) const {
        Eigen::VectorXd out(points.rows());
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            out(i) = evaluate(Eigen::VectorXd(points.row(i).transpose()));
        return out;
    }

    /// Coefficients of the represented function over the full product basis
    /// of the leaves, indexed row-major over variables 1..d (variable 1
    /// slowest). Guarded by a size cap.
    Eigen::VectorXd full_coefficient_tensor(std::int64_t cap = 10'000'000) const {
        std::int64_t total = 1;
        for (const auto& b : leaf_bases_) {
            total *= b.dimension();
            if (total > cap)
                throw std::runtime_error("full_coefficient_tensor: size cap exceeded");
        }
        Eigen::MatrixXd expansion = subtree_expansion(tree_.root(), cap);
        return expansion.col(0);
    }

    /// Rank of the alpha-matricization of the coefficient tensor: number of
    /// singular values above tolerance x sigma_max. Small instances only.
    int alpha_matricization_rank(const NodeSet& alpha, double tolerance,
                                 std::int64_t cap = 10'000'000) const {
        Eigen::VectorXd full = full_coefficient_tensor(cap);
        const int d = tree_.dimension();
        NodeSet a = alpha;
        std::sort(a.begin(), a.end());
        std::vector<int> dims(d);
        for (int nu = 1; nu <= d; ++nu) dims[nu - 1] = leaf_bases_[nu - 1].dimension();

        // Axis order: alpha variables first (ascending), complement after.
        std::vector<int> perm;
        for (int nu : a) perm.push_back(nu - 1);
        for (int nu = 1; nu <= d; ++nu)
            if (!std::binary_search(a.begin(), a.end(), nu)) perm.push_back(nu - 1);
        Eigen::VectorXd reordered = permute_axes(full, dims, perm);

        std::int64_t rows = 1;
        for (int nu : a) rows *= dims[nu - 1];
        std::int64_t cols = reordered.size() / rows;
        Eigen::MatrixXd unfolding =
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(reordered.data(), rows, cols);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(unfolding);
        const Eigen::VectorXd& sv = svd.singularValues();
        if (sv.size() == 0 || sv(0) == 0.0) return 0;
        int count = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > tolerance * sv(0)) ++count;
        return count;
    }

    /// Reorder a flat row-major tensor: perm[i] = current axis that becomes
    /// axis i of the output.
    static Eigen::VectorXd permute_axes(const Eigen::VectorXd& data,
                                        const std::vector<int>& dims,
                                        const std::vector<int>& perm) {
        const int k = static_cast<int>(dims.size());
        std::vector<std::int64_t> stride(k, 1);
        for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];
        std::vector<int> out_dims(k);
        for (int i = 0; i < k; ++i) out_dims[i] = dims[perm[i]];
        Eigen::VectorXd out(data.size());
        std::vector<int> idx(k, 0);
        for (std::int64_t flat = 0; flat < data.size(); ++flat) {
            std::int64_t src = 0;
            for (int i = 0; i < k; ++i) src += stride[perm[i]] * idx[i];
            out(flat) = data(src);
            for (int i = k - 1; i >= 0; --i) {
                if (++idx[i] < out_dims[i]) break;
                idx[i] = 0;
            }
        }
        return out;
    }

private:
    Eigen::VectorXd child_kron(int id, const std::vector<Eigen::VectorXd>& value) const {
        std::vector<Eigen::VectorXd> parts;
        parts.reserve(tree_.children(id).size());
        for (int c : tree_.children(id)) parts.push_back(value[c]);
        return kron_all(parts);
    }

    /// Expansion of node id over the product basis of its subtree's leaves,
    /// rows indexed row-major by the subtree variables in ascending order.
    Eigen::MatrixXd subtree_expansion(int id, std::int64_t cap) const {
        if (tree_.is_leaf(id)) return factors_[id];
        const auto& children = tree_.children(id);
        // Kron of child expansions, block-ordered by child.
        Eigen::MatrixXd acc = subtree_expansion(children[0], cap);
        std::vector<int> vars = tree_.node(children[0]);
        for (std::size_t c = 1; c < children.size(); ++c) {
            Eigen::MatrixXd rhs = subtree_expansion(children[c], cap);
            if (acc.rows() * rhs.rows() > cap)
                throw std::runtime_error("subtree_expansion: size cap exceeded");
            Eigen::MatrixXd next(acc.rows() * rhs.rows(), acc.cols() * rhs.cols());
            for (Eigen::Index i = 0; i < acc.rows(); ++i)
                for (Eigen::Index j = 0; j < acc.cols(); ++j)
                    next.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) =
                        acc(i, j) * rhs;
            acc.swap(next);
            const auto& cv = tree_.node(children[c]);
            vars.insert(vars.end(), cv.begin(), cv.end());
        }
        acc = acc * factors_[id];

        // Rows are currently indexed by (vars in child-block order); permute
        // each column so rows follow the node's variables in ascending order.
        std::vector<int> order(vars.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&vars](int a, int b) { return vars[a] < vars[b]; });
        bool already_sorted = std::is_sorted(vars.begin(), vars.end());
        if (!already_sorted) {
            std::vector<int> dims(vars.size());
            for (std::size_t i = 0; i < vars.size(); ++i)
                dims[i] = leaf_bases_[vars[i] - 1].dimension();
            Eigen::MatrixXd permuted(acc.rows(), acc.cols());
            for (Eigen::Index j = 0; j < acc.cols(); ++j)
                permuted.col(j) = permute_axes(acc.col(j), dims, order);
            acc.swap(permuted);
        }
        return acc;
    }

    void check_shapes() const {
        if (static_cast<int>(leaf_bases_.size()) != tree_.dimension())
            throw std::invalid_argument("network: one leaf basis per variable required");
        if (static_cast<int>(factors_.size()) != tree_.node_count())
            throw std::invalid_argument("network: one factor per tree node required");
        for (int id = 0; id < tree_.node_count(); ++id) {
            const auto& f = factors_[id];
            if (f.cols() < 1) throw std::invalid_argument("network: rank must be >= 1");
            if (tree_.is_leaf(id)) {
                int nu = tree_.node(id)[0];
                if (f.rows() != leaf_bases_[nu - 1].dimension())
                    throw std::invalid_argument("network: leaf factor shape mismatch at " +
                                                node_to_string(tree_.node(id)));
            } else {
                Eigen::Index prod = 1;
                for (int c : tree_.children(id)) prod *= factors_[c].cols();
                if (f.rows() != prod)
                    throw std::invalid_argument(
                        "network: interior factor shape mismatch at " +
                        node_to_string(tree_.node(id)));
            }
        }
        if (factors_[tree_.root()].cols() != 1)
            throw std::invalid_argument("network: root rank must be 1");
    }

    DimensionTree tree_;
    std::vector<LeafBasis> leaf_bases_;
    std::vector<Eigen::MatrixXd> factors_;
};

}  // namespace ttn

#endif
