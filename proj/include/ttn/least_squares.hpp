#ifndef TTN_LEAST_SQUARES_HPP
#define TTN_LEAST_SQUARES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "ttn/sampling.hpp"

namespace ttn {

/// Parameters of the boosted sampling scheme: M candidate samples per round,
/// Gram stability threshold delta, per-sample failure probability eta, and
/// the minimum fraction of points kept by subsampling (keep_fraction <= 0
/// means "down to the space dimension", the m_alpha/n_alpha choice).
struct StabilityParams {
    int repetitions = 100;
    double delta = 0.9;
    double eta = 0.01;
    double keep_fraction = 0.0;
    int max_rounds = 100;
};

/// A feature space as seen by the least-squares machinery: orthonormal basis
/// evaluation, the optimal-measure weight, and a sampler for that measure.
/// Points are full d-vectors of which only the space's coordinates are used.
struct ProjectionSpace {
    int dimension = 0;
    int point_size = 0;
    std::string label;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval_basis;
    std::function<double(const Eigen::VectorXd&)> weight;
    std::function<Eigen::VectorXd(Rng&)> draw;
};

/// View of a univariate basis as a projection space over coordinate nu of a
/// d-dimensional point. The sampler object must outlive the returned space.
inline ProjectionSpace make_projection_space(const LeafSampler& sampler, int nu, int d) {
    ProjectionSpace space;
    space.dimension = sampler.basis().dimension();
    space.point_size = d;
    space.label = node_to_string({nu});
    space.eval_basis = [&sampler, nu](const Eigen::VectorXd& x) {
        return sampler.basis().eval(x(nu - 1));
    };
    space.weight = [&sampler, nu](const Eigen::VectorXd& x) {
        return sampler.weight(x(nu - 1));
    };
    space.draw = [&sampler, nu, d](Rng& rng) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
        x(nu - 1) = sampler.sample(rng);
        return x;
    };
    return space;
}

/// View of the product space spanned by the children subspaces of an interior
/// node. The referenced network state must outlive the returned space; the
/// component-deterministic sampling grids are shared across draws.
inline ProjectionSpace make_projection_space(const NetworkRef& net, int alpha) {
    int m = 1;
    for (int c : net.tree->children(alpha)) m *= net.rank(c);
    ProjectionSpace space;
    space.dimension = m;
    space.point_size = net.tree->dimension();
    space.label = node_to_string(net.tree->node(alpha));
    space.eval_basis = [net, alpha](const Eigen::VectorXd& x) {
        return eval_product_basis(net, alpha, x);
    };
    space.weight = [net, alpha](const Eigen::VectorXd& x) {
        return 1.0 / interior_inverse_weight(net, alpha, x);
    };
    auto sampler = std::make_shared<ProductSpaceSampler>(net, alpha);
    space.draw = [sampler](Rng& rng) {
        Eigen::VectorXd x =
            Eigen::VectorXd::Zero(sampler->network().tree->dimension());
        sampler->draw(rng, x);
        return x;
    };
    return space;
}

/// Sample points with their least-squares weights and the achieved stability
/// certificate ||G - I||_2.
struct WeightedSampleSet {
    Eigen::MatrixXd points;   // z x d, row i is x^i
    Eigen::VectorXd weights;  // w(x^i)
    double certificate = std::numeric_limits<double>::infinity();
    std::string space_label;

    int size() const { return static_cast<int>(points.rows()); }
};

/// Smallest n with n >= (-delta + (1+delta)log(1+delta)) m log(2 m / eta),
/// the sample count under which the empirical Gram matrix is stable with
/// probability at least 1 - eta.
inline int min_sample_count(int m, double delta, double eta) {
    if (m < 1) throw std::invalid_argument("min_sample_count: m must be >= 1");
    double c = -delta + (1.0 + delta) * std::log1p(delta);
    double v = c * m * std::log(2.0 * m / eta);
    int n = static_cast<int>(std::ceil(v));
    if (n < static_cast<double>(v)) ++n;  // guard against ceil round-off
    return std::max(n, 1);
}

inline double spectral_distance_to_identity(const Eigen::MatrixXd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    return std::max(std::abs(ev(0) - 1.0), std::abs(ev(ev.size() - 1) - 1.0));
}

/// G_{jk} = (1/z) sum_i w(x^i) phi_j(x^i) phi_k(x^i).
inline Eigen::MatrixXd empirical_gram(const ProjectionSpace& space,
                                      const WeightedSampleSet& sample) {
    if (sample.size() == 0)
        throw std::invalid_argument("empirical_gram: empty sample");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(space.dimension, space.dimension);
    for (int i = 0; i < sample.size(); ++i) {
        Eigen::VectorXd phi = space.eval_basis(sample.points.row(i).transpose());
        gram.noalias() += sample.weights(i) * phi * phi.transpose();
    }
    return gram / sample.size();
}

/// Draw M candidate n-samples from the optimal measure, keep the one with the
/// smallest ||G - I||_2, and repeat whole rounds until the minimizer meets the
/// stability condition <= delta.
inline WeightedSampleSet draw_stable_sample(const ProjectionSpace& space, int n,
                                            const StabilityParams& params, Rng& rng) {
    if (n < space.dimension)
        throw std::invalid_argument("draw_stable_sample: n must be >= dim(V)");
    double best_overall = std::numeric_limits<double>::infinity();
    for (int round = 0; round < params.max_rounds; ++round) {
        WeightedSampleSet best;
        for (int cand = 0; cand < params.repetitions; ++cand) {
            WeightedSampleSet s;
            s.points.resize(n, space.point_size);
            s.weights.resize(n);
            Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(space.dimension, space.dimension);
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd x = space.draw(rng);
                s.points.row(i) = x.transpose();
                s.weights(i) = space.weight(x);
                Eigen::VectorXd phi = space.eval_basis(x);
                gram.noalias() += s.weights(i) * phi * phi.transpose();
            }
            gram /= n;
            double crit = spectral_distance_to_identity(gram);
            if (crit < best.certificate) {
                s.certificate = crit;
                s.space_label = space.label;
                best = std::move(s);
            }
        }
        if (best.certificate <= params.delta) return best;
        best_overall = std::min(best_overall, best.certificate);
    }
    throw std::runtime_error("draw_stable_sample: no stable sample for space {" +
                             space.label + "} after " +
                             std::to_string(params.max_rounds) +
                             " rounds (best criterion " + std::to_string(best_overall) +
                             ")");
}

/// Greedily remove points while the stability certificate holds and the
/// sample stays larger than z_min: each step removes the point whose removal
/// keeps ||G - I||_2 smallest. Candidate criteria are evaluated through
/// rank-one downdates of the Gram matrix; the kept matrix is recomputed
/// exactly after every removal.
inline WeightedSampleSet greedy_subsample(const ProjectionSpace& space,
                                          WeightedSampleSet sample, double delta,
                                          int z_min) {
    z_min = std::max(z_min, space.dimension);
    int z = sample.size();
    if (z <= z_min) return sample;

    Eigen::MatrixXd phi(z, space.dimension);
    for (int i = 0; i < z; ++i)
        phi.row(i) = space.eval_basis(sample.points.row(i).transpose()).transpose();
    Eigen::MatrixXd gram =
        phi.transpose() * sample.weights.asDiagonal() * phi / double(z);

    std::vector<int> alive(z);
    std::iota(alive.begin(), alive.end(), 0);

    while (static_cast<int>(alive.size()) > z_min) {
        const int zc = static_cast<int>(alive.size());
        double best_crit = std::numeric_limits<double>::infinity();
        int best_pos = -1;
        for (int pos = 0; pos < zc; ++pos) {
            int i = alive[pos];
            Eigen::MatrixXd downdated =
                (double(zc) * gram -
                 sample.weights(i) * phi.row(i).transpose() * phi.row(i)) /
                double(zc - 1);
            double crit = spectral_distance_to_identity(downdated);
            if (crit < best_crit) {
                best_crit = crit;
                best_pos = pos;
            }
        }
        if (best_crit > delta) break;
        alive.erase(alive.begin() + best_pos);
        gram.setZero();
        for (int i : alive)
            gram.noalias() += sample.weights(i) * phi.row(i).transpose() * phi.row(i);
        gram /= double(alive.size());
    }

    WeightedSampleSet out;
    out.points.resize(alive.size(), sample.points.cols());
    out.weights.resize(alive.size());
    for (std::size_t k = 0; k < alive.size(); ++k) {
        out.points.row(k) = sample.points.row(alive[k]);
        out.weights(k) = sample.weights(alive[k]);
    }
    out.certificate = spectral_distance_to_identity(gram);
    out.space_label = sample.space_label;
    return out;
}

/// Weighted least-squares coefficients of the values over the space's basis:
/// argmin_c sum_i w_i (f_i - phi(x^i)^T c)^2, solved by a column-pivoted QR of
/// the weighted design matrix.
inline Eigen::VectorXd project(const ProjectionSpace& space,
                               const WeightedSampleSet& sample,
                               const Eigen::VectorXd& values) {
    if (values.size() != sample.size())
        throw std::invalid_argument("project: values not aligned with sample points");
    const int z = sample.size();
    Eigen::MatrixXd design(z, space.dimension);
    Eigen::VectorXd rhs(z);
    for (int i = 0; i < z; ++i) {
        double sw = std::sqrt(sample.weights(i) / z);
        design.row(i) = sw * space.eval_basis(sample.points.row(i).transpose()).transpose();
        rhs(i) = sw * values(i);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < space.dimension)
        throw std::runtime_error("project: singular Gram matrix for space {" +
                                 sample.space_label +
                                 "}; stability certificate violated");
    return qr.solve(rhs);
}

}  // namespace ttn

#endif
