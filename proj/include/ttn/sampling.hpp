#ifndef TTN_SAMPLING_HPP
#define TTN_SAMPLING_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ttn/measures.hpp"
#include "ttn/rng.hpp"
#include "ttn/tensor_network.hpp"

namespace ttn {

/// Cumulative distribution of q(x) dmu(x) on the measure's (possibly
/// truncated) support, tabulated on a uniform grid with per-interval
/// two-point Gauss integration. The grid is doubled until two successive
/// resolutions agree below `tol` at shared nodes.
class GridCdf {
public:
    GridCdf(const MarginalMeasure& measure, const std::function<double(double)>& q,
            double tol = 1e-6, int n0 = 1024, int cap = 32768)
        : lo_(measure.grid_lower()), hi_(measure.grid_upper()) {
        auto integrand = [&](double x) { return std::max(0.0, q(x)) * measure.density(x); };
        int n = n0;
        build(integrand, n);
        while (n < cap) {
            std::vector<double> coarse = cdf_;
            build(integrand, 2 * n);
            double diff = 0.0;
            for (int i = 0; i <= n; ++i)
                diff = std::max(diff, std::abs(coarse[i] - cdf_[2 * i]));
            n *= 2;
            if (diff <= tol) break;
        }
    }

    /// Inverse-CDF draw; within a grid cell the density is treated as linear,
    /// so the local CDF is quadratic and inverted in closed form.
    double sample(Rng& rng) const {
        double u = rng.uniform01();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        int i = static_cast<int>(it - cdf_.begin());
        if (i <= 0) return lo_;
        if (i >= static_cast<int>(cdf_.size())) return hi_;
        --i;
        double h = (hi_ - lo_) / (static_cast<double>(cdf_.size()) - 1.0);
        double c0 = cdf_[i];
        double f0 = density_[i], f1 = density_[i + 1];
        double target = u - c0;
        double a = 0.5 * (f1 - f0) / h;
        double t;
        if (std::abs(a) < 1e-300) {
            t = f0 > 0 ? target / f0 : 0.5 * h;
        } else {
            double disc = f0 * f0 + 4.0 * a * target;
            t = disc > 0 ? (-f0 + std::sqrt(disc)) / (2.0 * a) : 0.5 * h;
        }
        if (!(t >= 0.0)) t = 0.0;
        if (t > h) t = h;
        return lo_ + i * h + t;
    }

    double cdf(double x) const {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        double h = (hi_ - lo_) / (static_cast<double>(cdf_.size()) - 1.0);
        double s = (x - lo_) / h;
        int i = std::min(static_cast<int>(s), static_cast<int>(cdf_.size()) - 2);
        double t = s - i;
        return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
    }

private:
    void build(const std::function<double(double)>& f, int n) {
        const double h = (hi_ - lo_) / n;
        // two-point Gauss nodes relative to an interval
        const double g = 0.5 / std::sqrt(3.0);
        cdf_.assign(n + 1, 0.0);
        density_.assign(n + 1, 0.0);
        density_[0] = f(lo_);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double mid = lo_ + (i + 0.5) * h;
            acc += 0.5 * h * (f(mid - g * h) + f(mid + g * h));
            cdf_[i + 1] = acc;
            density_[i + 1] = f(lo_ + (i + 1) * h);
        }
        if (acc <= 0.0)
            throw std::runtime_error("GridCdf: density integrates to zero");
        for (auto& c : cdf_) c /= acc;
        for (auto& dv : density_) dv /= acc;
    }

    double lo_, hi_;
    std::vector<double> cdf_;
    std::vector<double> density_;
};

/// Read-only view over a (possibly partially built) network: enough to work
/// with the subspaces already constructed below some node.
struct NetworkRef {
    const DimensionTree* tree = nullptr;
    const std::vector<LeafBasis>* leaf_bases = nullptr;  // per variable
    const std::vector<Eigen::MatrixXd>* factors = nullptr;  // per node id

    const LeafBasis& basis_of(int variable) const { return (*leaf_bases)[variable - 1]; }
    const Eigen::MatrixXd& factor(int id) const { return (*factors)[id]; }
    int rank(int id) const { return static_cast<int>((*factors)[id].cols()); }
};

/// Values (psi_1(x_alpha),...,psi_r(x_alpha)) of the orthonormal subspace
/// functions stored at a node, by leaf-to-root contraction of the subtree.
/// `x` is a full d-vector; only the node's coordinates are read.
inline Eigen::VectorXd eval_subspace(const NetworkRef& net, int id,
                                     const Eigen::VectorXd& x) {
    const DimensionTree& tree = *net.tree;
    if (tree.is_leaf(id)) {
        int nu = tree.node(id)[0];
        return net.factor(id).transpose() * net.basis_of(nu).eval(x(nu - 1));
    }
    std::vector<Eigen::VectorXd> parts;
    parts.reserve(tree.children(id).size());
    for (int c : tree.children(id)) parts.push_back(eval_subspace(net, c, x));
    return net.factor(id).transpose() * kron_all(parts);
}

/// Values of the product basis of V_alpha = tensor product of the children
/// subspaces, in kron order (first child slowest).
inline Eigen::VectorXd eval_product_basis(const NetworkRef& net, int id,
                                          const Eigen::VectorXd& x) {
    std::vector<Eigen::VectorXd> parts;
    parts.reserve(net.tree->children(id).size());
    for (int c : net.tree->children(id)) parts.push_back(eval_subspace(net, c, x));
    return kron_all(parts);
}

namespace detail {

/// Cache of the inverse-CDF grids that are deterministic for a fixed mixture
/// component: the leftmost marginal chain of each child depends only on the
/// drawn component index, not on previously sampled coordinates.
using FirstChainCache = std::map<std::pair<int, int>, std::shared_ptr<GridCdf>>;

/// Draw x over the scope of node `id` from the density
/// sum_{g,g'} M[g,g'] psi_g psi_g' dmu, with M symmetric PSD of unit trace.
/// Works coordinate by coordinate: marginals and conditionals of the squared
/// network reduce to partial traces thanks to the orthonormality of the
/// children subspaces. `key`, when set, identifies a component-deterministic
/// density eligible for grid caching.
inline void sample_matrix_density(const NetworkRef& net, int id, Eigen::MatrixXd M,
                                  Rng& rng, Eigen::VectorXd& x,
                                  FirstChainCache* cache = nullptr,
                                  const std::pair<int, int>* key = nullptr) {
    const DimensionTree& tree = *net.tree;
    double tr = M.trace();
    if (!(tr > 1e-300)) {
        M = Eigen::MatrixXd::Identity(M.rows(), M.cols()) / M.rows();
    } else {
        M /= tr;
    }
    if (tree.is_leaf(id)) {
        int nu = tree.node(id)[0];
        const LeafBasis& basis = net.basis_of(nu);
        const Eigen::MatrixXd& coeff = net.factor(id);  // m x r
        if (cache && key) {
            auto it = cache->find(*key);
            if (it == cache->end()) {
                Eigen::MatrixXd mb = coeff * M * coeff.transpose();
                it = cache
                         ->emplace(*key, std::make_shared<GridCdf>(
                                             basis.measure(),
                                             [&basis, mb](double t) {
                                                 Eigen::VectorXd phi = basis.eval(t);
                                                 return phi.dot(mb * phi);
                                             }))
                         .first;
            }
            x(nu - 1) = it->second->sample(rng);
            return;
        }
        Eigen::MatrixXd mb = coeff * M * coeff.transpose();
        GridCdf cdf(basis.measure(), [&](double t) {
            Eigen::VectorXd phi = basis.eval(t);
            return phi.dot(mb * phi);
        });
        x(nu - 1) = cdf.sample(rng);
        return;
    }

    const auto& children = tree.children(id);
    const Eigen::MatrixXd& transfer = net.factor(id);  // (prod r_c) x r_id
    Eigen::MatrixXd reduced = transfer * M * transfer.transpose();
    std::vector<int> dims;
    dims.reserve(children.size());
    for (int c : children) dims.push_back(net.rank(c));

    // Peel off one child at a time: partial-trace the rest, sample the child,
    // then contract the drawn child's psi values into the reduced matrix.
    for (std::size_t ci = 0; ci < children.size(); ++ci) {
        int rc = dims[ci];
        Eigen::Index tail = 1;
        for (std::size_t j = ci + 1; j < children.size(); ++j) tail *= dims[j];

        Eigen::MatrixXd marginal = Eigen::MatrixXd::Zero(rc, rc);
        for (int k = 0; k < rc; ++k)
            for (int k2 = 0; k2 < rc; ++k2)
                for (Eigen::Index t = 0; t < tail; ++t)
                    marginal(k, k2) += reduced(k * tail + t, k2 * tail + t);

        // only the first child's marginal is independent of sampled values
        sample_matrix_density(net, children[ci], marginal, rng, x, cache,
                              ci == 0 ? key : nullptr);

        if (ci + 1 == children.size()) break;
        Eigen::VectorXd a = eval_subspace(net, children[ci], x);
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(tail, tail);
        for (int k = 0; k < rc; ++k)
            for (int k2 = 0; k2 < rc; ++k2)
                next.noalias() += a(k) * a(k2) *
                                  reduced.block(k * tail, k2 * tail, tail, tail);
        double ntr = next.trace();
        if (ntr > 1e-300) next /= ntr;
        reduced.swap(next);
    }
}

}  // namespace detail

/// Sampler for the optimal density of a univariate feature space: the mixture
/// (1/m) sum_j phi_j^2 dmu, drawn by picking a component uniformly and
/// inverting its gridded CDF. Component CDFs are built once and cached.
class LeafSampler {
public:
    explicit LeafSampler(const LeafBasis& basis) : basis_(basis) {
        components_.reserve(basis.dimension());
        for (int j = 0; j < basis.dimension(); ++j) {
            components_.push_back(std::make_shared<GridCdf>(
                basis.measure(), [&basis, j](double t) {
                    double v = basis.eval(t)(j);
                    return v * v;
                }));
        }
    }

    double sample(Rng& rng) const {
        int j = static_cast<int>(rng.below(components_.size()));
        return components_[j]->sample(rng);
    }

    /// w(x)^{-1} = (1/m) sum_j phi_j(x)^2, the density of rho w.r.t. mu.
    double inverse_weight(double x) const {
        return basis_.eval(x).squaredNorm() / basis_.dimension();
    }

    double weight(double x) const { return 1.0 / inverse_weight(x); }

    const LeafBasis& basis() const { return basis_; }

private:
    LeafBasis basis_;
    std::vector<std::shared_ptr<GridCdf>> components_;
};

/// One draw from the optimal density of a leaf feature space.
inline double sample_leaf(const LeafBasis& basis, Rng& rng) {
    return LeafSampler(basis).sample(rng);
}

namespace detail {

inline void check_normalized(const NetworkRef& net, int child) {
    const Eigen::MatrixXd& f = net.factor(child);
    for (Eigen::Index k = 0; k < f.cols(); ++k) {
        double norm = f.col(k).norm();
        if (std::abs(norm - 1.0) > 1e-8)
            throw std::runtime_error(
                "sample_interior: subspace function " + std::to_string(k + 1) +
                " of node " + node_to_string(net.tree->node(child)) +
                " is not normalized");
    }
}

}  // namespace detail

/// One draw of x_alpha from the optimal density of the product space
/// V_alpha = tensor of the children subspaces: independently per child beta,
/// pick k uniformly in {1..r_beta} and draw from psi_k^2 dmu_beta. The drawn
/// coordinates are written into the full vector x.
inline void sample_interior(const NetworkRef& net, int alpha, Rng& rng,
                            Eigen::VectorXd& x) {
    for (int c : net.tree->children(alpha)) {
        detail::check_normalized(net, c);
        int r = net.rank(c);
        int k = static_cast<int>(rng.below(r));
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r, r);
        M(k, k) = 1.0;
        detail::sample_matrix_density(net, c, M, rng, x);
    }
}

/// Repeated-draw sampler for one product space; identical draws to
/// sample_interior but with the component-deterministic grids built once.
class ProductSpaceSampler {
public:
    ProductSpaceSampler(NetworkRef net, int alpha) : net_(net), alpha_(alpha) {
        for (int c : net_.tree->children(alpha_)) detail::check_normalized(net_, c);
    }

    void draw(Rng& rng, Eigen::VectorXd& x) const {
        for (int c : net_.tree->children(alpha_)) {
            int r = net_.rank(c);
            int k = static_cast<int>(rng.below(r));
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r, r);
            M(k, k) = 1.0;
            std::pair<int, int> key{c, k};
            detail::sample_matrix_density(net_, c, M, rng, x, &cache_, &key);
        }
    }

    int alpha() const { return alpha_; }
    const NetworkRef& network() const { return net_; }

private:
    NetworkRef net_;
    int alpha_;
    mutable detail::FirstChainCache cache_;
};

/// Density of x_alpha under the product-space optimal measure, in factorized
/// form: w^{-1}(x_alpha) = prod_beta (1/r_beta) sum_k psi_k^beta(x_beta)^2.
inline double interior_inverse_weight(const NetworkRef& net, int alpha,
                                      const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int c : net.tree->children(alpha))
        v *= eval_subspace(net, c, x).squaredNorm() / net.rank(c);
    return v;
}

/// Callable view of an optimal sampling measure: the density value
/// w^{-1}(x_alpha) and the least-squares weight w(x_alpha).
struct SamplingDensity {
    std::function<double(const Eigen::VectorXd&)> inverse_weight;
    std::function<double(const Eigen::VectorXd&)> weight;
};

/// Density of the optimal measure of a leaf feature space. The point is the
/// 1-vector (x_nu).
inline SamplingDensity density(const LeafBasis& basis) {
    SamplingDensity d;
    d.inverse_weight = [basis](const Eigen::VectorXd& x) {
        return basis.eval(x(0)).squaredNorm() / basis.dimension();
    };
    d.weight = [iw = d.inverse_weight](const Eigen::VectorXd& x) { return 1.0 / iw(x); };
    return d;
}

/// Density of the optimal measure of an interior product space; the point is
/// a full d-vector of which only the node's coordinates are read.
inline SamplingDensity density(const NetworkRef& net, int alpha) {
    SamplingDensity d;
    d.inverse_weight = [net, alpha](const Eigen::VectorXd& x) {
        return interior_inverse_weight(net, alpha, x);
    };
    d.weight = [iw = d.inverse_weight](const Eigen::VectorXd& x) { return 1.0 / iw(x); };
    return d;
}

}  // namespace ttn

#endif
