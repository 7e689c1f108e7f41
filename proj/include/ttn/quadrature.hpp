#ifndef TTN_QUADRATURE_HPP
#define TTN_QUADRATURE_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace ttn {

/// Nodes and weights of an n-point Gauss rule. Weights sum to the total mass
/// of the underlying probability measure, i.e. to one.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

namespace detail {

/// Nodes from the Jacobi-matrix eigenvalues, polished by two Newton steps on
/// the degree-n orthonormal polynomial; weights from the Christoffel identity
/// w_i = 1 / sum_{k<n} p_k(x_i)^2, which stays accurate in the tails where
/// eigenvector components underflow. `offdiag[k]` couples degrees k and k+1.
inline QuadratureRule golub_welsch(const Eigen::VectorXd& diag,
                                   const Eigen::VectorXd& offdiag) {
    const auto n = diag.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, offdiag.head(n - 1));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("quadrature: tridiagonal eigensolve failed");
    QuadratureRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(n);

    Eigen::VectorXd off(n);
    off.head(n - 1) = offdiag.head(n - 1);
    off(n - 1) = 1.0;  // scales only the degree-n value; Newton is scale-free

    // orthonormal recurrence: b_{k+1} p_{k+1} = (x - a_k) p_k - b_k p_{k-1}
    auto values_and_derivative = [&](double x, Eigen::VectorXd& p, double& pn,
                                     double& dpn) {
        p(0) = 1.0;
        double d_prev = 0.0, d_cur = 0.0;
        double prev = 0.0, cur = 1.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            double bk = k > 0 ? off(k - 1) : 0.0;
            double next = ((x - diag(k)) * cur - bk * prev) / off(k);
            double d_next = (cur + (x - diag(k)) * d_cur - bk * d_prev) / off(k);
            prev = cur;
            cur = next;
            d_prev = d_cur;
            d_cur = d_next;
            if (k + 1 < n) p(k + 1) = cur;
        }
        pn = cur;
        dpn = d_cur;
    };

    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double x = rule.nodes(i);
        double pn = 0.0, dpn = 1.0;
        for (int step = 0; step < 2; ++step) {
            values_and_derivative(x, p, pn, dpn);
            if (dpn != 0.0) x -= pn / dpn;
        }
        values_and_derivative(x, p, pn, dpn);
        rule.nodes(i) = x;
        rule.weights(i) = 1.0 / p.squaredNorm();
    }
    return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule for the uniform probability measure on [-1,1];
/// exact for polynomials of degree <= 2n-1.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n);
    for (int k = 1; k < n; ++k)
        off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    return detail::golub_welsch(diag, off);
}

/// n-point Gauss-Hermite rule for the standard Gaussian measure on R
/// (probabilists' convention); exact for polynomials of degree <= 2n-1.
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n);
    for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(double(k));
    return detail::golub_welsch(diag, off);
}

/// Affine map of a rule on [-1,1] to [a,b] (weights unchanged: both are
/// probability measures).
inline QuadratureRule scale_to_interval(QuadratureRule rule, double a, double b) {
    rule.nodes = (0.5 * (b - a) * rule.nodes.array() + 0.5 * (a + b)).matrix();
    return rule;
}

}  // namespace ttn

#endif
