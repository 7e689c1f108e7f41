#ifndef TTN_PRINCIPAL_SUBSPACES_HPP
#define TTN_PRINCIPAL_SUBSPACES_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ttn/least_squares.hpp"
#include "ttn/oracle.hpp"

namespace ttn {

/// Coefficients of the projected fibers: column l holds the weighted
/// least-squares coefficients of u(., x_complement^l) over the space basis,
/// together with the samples that generated them.
struct CoefficientMatrix {
    Eigen::MatrixXd values;             // m x z_c
    Eigen::MatrixXd complement_points;  // z_c x d, complement coordinates set
    WeightedSampleSet sample;           // the z_alpha projection points

    int columns() const { return static_cast<int>(values.cols()); }
};

/// Estimated principal subspace of a node: orthonormal coefficient columns
/// over the space basis, the singular values of the coefficient matrix, and
/// the diagnostics of the estimation.
struct PrincipalSubspace {
    Eigen::MatrixXd basis;  // m x r, orthonormal columns
    Eigen::VectorXd singular_values;
    int z_complement = 0;
    double loo = std::numeric_limits<double>::quiet_NaN();
    double tail_ratio = 0.0;
    bool tolerance_met = true;
    bool degenerate = false;
    CoefficientMatrix coefficients;

    int rank() const { return static_cast<int>(basis.cols()); }
};

/// Leading r left singular vectors and all singular values. The sign of each
/// vector is fixed so its largest-magnitude entry is positive.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> truncated_svd(
    const Eigen::MatrixXd& A, int r) {
    const int maxr = static_cast<int>(std::min(A.rows(), A.cols()));
    if (r < 1 || r > maxr)
        throw std::invalid_argument("truncated_svd: rank out of range");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
    Eigen::MatrixXd left = svd.matrixU().leftCols(r);
    for (int k = 0; k < r; ++k) {
        Eigen::Index imax = 0;
        left.col(k).cwiseAbs().maxCoeff(&imax);
        if (left(imax, k) < 0.0) left.col(k) = -left.col(k);
    }
    return {svd.singularValues(), left};
}

/// Minimal r with sum_{k>r} sigma_k^2 <= eps^2 sum_k sigma_k^2, at least 1.
/// An all-zero spectrum returns 1 by convention.
inline int rank_for_tolerance(const Eigen::VectorXd& sigma, double eps) {
    double total = sigma.squaredNorm();
    if (total <= 0.0) return 1;
    double tail = total;
    for (int r = 1; r <= sigma.size(); ++r) {
        tail -= sigma(r - 1) * sigma(r - 1);
        if (tail <= eps * eps * total) return r;
    }
    return static_cast<int>(sigma.size());
}

/// Leave-one-out reconstruction error of the rank-r principal subspace:
/// sum_l ||A_l - V_{\l,r} V_{\l,r}^T A_l||^2 / sum_l ||A_l||^2, where
/// V_{\l,r} spans the r leading left singular vectors of A with column l
/// removed. Returned as the raw energy ratio in [0,1].
inline double loo_error(const Eigen::MatrixXd& A, int r) {
    const int zc = static_cast<int>(A.cols());
    if (zc < 2) throw std::invalid_argument("loo_error: needs at least 2 columns");
    if (r < 1 || r > std::min<int>(static_cast<int>(A.rows()), zc - 1))
        throw std::invalid_argument("loo_error: rank out of range");
    double total = A.squaredNorm();
    if (total <= 0.0) return 0.0;
    double residual = 0.0;
    Eigen::MatrixXd deleted(A.rows(), zc - 1);
    for (int l = 0; l < zc; ++l) {
        if (l > 0) deleted.leftCols(l) = A.leftCols(l);
        if (l < zc - 1) deleted.rightCols(zc - 1 - l) = A.rightCols(zc - 1 - l);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(deleted, Eigen::ComputeThinU);
        Eigen::MatrixXd v = svd.matrixU().leftCols(std::min<int>(r, static_cast<int>(svd.nonzeroSingularValues())));
        Eigen::VectorXd col = A.col(l);
        residual += (col - v * (v.transpose() * col)).squaredNorm();
    }
    return residual / total;
}

/// Evaluate the oracle on the product grid {sample points} x {y} and solve
/// one weighted least-squares problem; returns the coefficient column.
/// Points combine by addition: sample rows carry the alpha coordinates,
/// y carries the complement coordinates, all other entries are zero.
inline Eigen::VectorXd project_column(const Oracle& u, const ProjectionSpace& space,
                                      const WeightedSampleSet& sample,
                                      const Eigen::VectorXd& y, int column_index = -1) {
    Eigen::VectorXd values(sample.size());
    for (int i = 0; i < sample.size(); ++i) {
        Eigen::VectorXd x = sample.points.row(i).transpose();
        x += y;
        try {
            values(i) = u(x);
        } catch (const std::exception& e) {
            throw std::runtime_error("oracle failed at grid point (i=" +
                                     std::to_string(i + 1) + ", l=" +
                                     std::to_string(column_index + 1) + "): " + e.what());
        }
    }
    return project(space, sample, values);
}

/// Full coefficient matrix for a fixed list of complement points; costs
/// z_alpha * z_complement oracle evaluations.
inline CoefficientMatrix assemble_coefficient_matrix(
    const Oracle& u, const ProjectionSpace& space, const WeightedSampleSet& sample,
    const std::vector<Eigen::VectorXd>& complement_points) {
    CoefficientMatrix A;
    A.sample = sample;
    A.values.resize(space.dimension, complement_points.size());
    A.complement_points.resize(complement_points.size(), space.point_size);
    for (std::size_t l = 0; l < complement_points.size(); ++l) {
        A.complement_points.row(l) = complement_points[l].transpose();
        A.values.col(l) =
            project_column(u, space, sample, complement_points[l], static_cast<int>(l));
    }
    return A;
}

struct PcaOptions {
    /// Threshold on the leave-one-out energy ratio (adaptive mode) or on the
    /// singular-value tail energy fraction (fixed mode).
    double tol_energy = 1e-8;
    int k_pca = 3;
    bool adaptive = true;
};

namespace detail {

inline PrincipalSubspace finalize_subspace(CoefficientMatrix A, int r, double loo,
                                           double tol_energy, bool met_by_loo,
                                           bool adaptive) {
    PrincipalSubspace out;
    out.coefficients = std::move(A);
    out.z_complement = out.coefficients.columns();
    const Eigen::MatrixXd& values = out.coefficients.values;
    if (values.squaredNorm() <= 0.0) {
        out.degenerate = true;
        out.basis = Eigen::MatrixXd::Zero(values.rows(), 1);
        out.basis(0, 0) = 1.0;
        out.singular_values = Eigen::VectorXd::Zero(std::min(values.rows(), values.cols()));
        out.loo = 0.0;
        out.tail_ratio = 0.0;
        out.tolerance_met = true;
        return out;
    }
    auto [sigma, basis] = truncated_svd(values, r);
    out.basis = std::move(basis);
    out.singular_values = sigma;
    double total = sigma.squaredNorm();
    out.tail_ratio = r < sigma.size() ? sigma.tail(sigma.size() - r).squaredNorm() / total : 0.0;
    out.loo = loo;
    out.tolerance_met = adaptive ? met_by_loo : out.tail_ratio <= tol_energy;
    return out;
}

}  // namespace detail

/// Principal-subspace estimation with a fixed number of complement samples
/// (z_c = m); the rank is chosen by the singular-value tail rule.
inline PrincipalSubspace fixed_principal_subspace(
    const Oracle& u, const ProjectionSpace& space, const WeightedSampleSet& sample,
    const std::function<Eigen::VectorXd(Rng&)>& draw_complement,
    const PcaOptions& options, Rng& rng,
    const std::vector<Eigen::VectorXd>& initial_columns = {},
    const Eigen::MatrixXd& initial_values = Eigen::MatrixXd()) {
    std::vector<Eigen::VectorXd> ys = initial_columns;
    while (static_cast<int>(ys.size()) < space.dimension)
        ys.push_back(draw_complement(rng));

    CoefficientMatrix A;
    A.sample = sample;
    A.values.resize(space.dimension, ys.size());
    A.complement_points.resize(ys.size(), space.point_size);
    for (std::size_t l = 0; l < ys.size(); ++l) {
        A.complement_points.row(l) = ys[l].transpose();
        if (static_cast<Eigen::Index>(l) < initial_values.cols())
            A.values.col(l) = initial_values.col(l);
        else
            A.values.col(l) = project_column(u, space, sample, ys[l], static_cast<int>(l));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A.values);
    int r = rank_for_tolerance(svd.singularValues(), std::sqrt(options.tol_energy));
    double loo = std::numeric_limits<double>::quiet_NaN();
    if (A.columns() >= 2 && r <= std::min<int>(space.dimension, A.columns() - 1))
        loo = loo_error(A.values, r);
    return detail::finalize_subspace(std::move(A), r, loo, options.tol_energy, false,
                                     false);
}

/// Adaptive principal-subspace estimation: columns are added one at a time
/// (one complement draw and one least-squares solve each) and the rank grows
/// until the leave-one-out energy ratio drops below the tolerance; the column
/// budget is k_pca * m. Returns the best subspace found, flagged when the
/// tolerance was not met within the budget.
inline PrincipalSubspace adaptive_principal_subspace(
    const Oracle& u, const ProjectionSpace& space, const WeightedSampleSet& sample,
    const std::function<Eigen::VectorXd(Rng&)>& draw_complement,
    const PcaOptions& options, Rng& rng,
    const std::vector<Eigen::VectorXd>& initial_columns = {},
    const Eigen::MatrixXd& initial_values = Eigen::MatrixXd()) {
    if (!options.adaptive)
        return fixed_principal_subspace(u, space, sample, draw_complement, options, rng,
                                        initial_columns, initial_values);
    const int m = space.dimension;
    const int budget = std::max(2, options.k_pca * m);

    std::vector<Eigen::VectorXd> ys;
    Eigen::MatrixXd A(m, 0);
    auto append_column = [&](int l) {
        Eigen::VectorXd y;
        Eigen::VectorXd col;
        if (l < static_cast<int>(initial_columns.size()) &&
            static_cast<Eigen::Index>(l) < initial_values.cols()) {
            y = initial_columns[l];
            col = initial_values.col(l);
        } else {
            y = draw_complement(rng);
            col = project_column(u, space, sample, y, l);
        }
        ys.push_back(y);
        A.conservativeResize(Eigen::NoChange, A.cols() + 1);
        A.col(A.cols() - 1) = col;
    };

    append_column(0);
    double err = std::numeric_limits<double>::infinity();
    int r = 1;
    int zc = 1;
    while (err > options.tol_energy && zc < budget) {
        append_column(zc);
        ++zc;
        if (A.squaredNorm() <= 0.0) {
            err = 0.0;
            r = 1;
            break;
        }
        r = 0;
        while (err > options.tol_energy && r < std::min(m, zc - 1)) {
            ++r;
            err = loo_error(A, r);
        }
    }
    r = std::max(r, 1);

    CoefficientMatrix coeff;
    coeff.sample = sample;
    coeff.values = A;
    coeff.complement_points.resize(ys.size(), space.point_size);
    for (std::size_t l = 0; l < ys.size(); ++l)
        coeff.complement_points.row(l) = ys[l].transpose();
    return detail::finalize_subspace(std::move(coeff), r, err, options.tol_energy,
                                     err <= options.tol_energy, true);
}

}  // namespace ttn

#endif
