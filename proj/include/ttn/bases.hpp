#ifndef TTN_BASES_HPP
#define TTN_BASES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ttn/measures.hpp"

namespace ttn {

enum class PolyFamily { Legendre, Hermite };

namespace detail {

/// Orthonormal Legendre values on [-1,1] w.r.t. the uniform probability
/// measure, degrees 0..p, by the normalized three-term recurrence.
template <typename Scalar>
void orthonormal_legendre(Scalar t, int p, Scalar* out) {
    out[0] = Scalar(1);
    if (p == 0) return;
    // b_k = k / sqrt(4k^2 - 1) for the measure dt/2 on [-1,1]
    Scalar prev = Scalar(1);
    Scalar bk = Scalar(1) / std::sqrt(Scalar(3));
    Scalar cur = t / bk;
    out[1] = cur;
    for (int k = 1; k < p; ++k) {
        Scalar bk1 = Scalar(k + 1) / std::sqrt(Scalar(4.0 * (k + 1) * (k + 1) - 1.0));
        Scalar next = (t * cur - bk * prev) / bk1;
        prev = cur;
        cur = next;
        bk = bk1;
        out[k + 1] = cur;
    }
}

/// Orthonormal probabilists' Hermite values w.r.t. the standard Gaussian,
/// degrees 0..p: He_k / sqrt(k!).
template <typename Scalar>
void orthonormal_hermite(Scalar x, int p, Scalar* out) {
    out[0] = Scalar(1);
    if (p == 0) return;
    Scalar prev = Scalar(1);
    Scalar cur = x;
    out[1] = cur;
    for (int k = 1; k < p; ++k) {
        Scalar next = (x * cur - std::sqrt(Scalar(k)) * prev) / std::sqrt(Scalar(k + 1));
        prev = cur;
        cur = next;
        out[k + 1] = cur;
    }
}

}  // namespace detail

/// Orthonormal polynomial basis of a univariate feature space, degree-graded
/// and nested: the degree-p basis is a prefix of the degree-(p+1) basis.
class LeafBasis {
public:
    LeafBasis() = default;
    LeafBasis(PolyFamily family, int max_degree, MarginalMeasure measure)
        : family_(family), degree_(max_degree), measure_(measure) {
        if (max_degree < 0)
            throw std::invalid_argument("LeafBasis: max_degree must be >= 0");
        if (family == PolyFamily::Legendre &&
            measure.kind() != MarginalMeasure::Kind::Uniform)
            throw std::invalid_argument("LeafBasis: Legendre requires a uniform measure");
        if (family == PolyFamily::Hermite &&
            measure.kind() != MarginalMeasure::Kind::Gaussian)
            throw std::invalid_argument("LeafBasis: Hermite requires the Gaussian measure");
    }

    PolyFamily family() const { return family_; }
    int max_degree() const { return degree_; }
    int dimension() const { return degree_ + 1; }
    const MarginalMeasure& measure() const { return measure_; }

    /// Values (phi_0(x), ..., phi_p(x)).
    Eigen::VectorXd eval(double x) const {
        Eigen::VectorXd v(dimension());
        if (family_ == PolyFamily::Legendre) {
            double a = measure_.lower(), b = measure_.upper();
            double t = (2.0 * x - a - b) / (b - a);
            detail::orthonormal_legendre(t, degree_, v.data());
        } else {
            detail::orthonormal_hermite(x, degree_, v.data());
        }
        return v;
    }

    /// Values at many points; column j holds phi_j at all points.
    Eigen::MatrixXd eval(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd out(x.size(), dimension());
        Eigen::VectorXd row(dimension());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            row = eval(x(i));
            out.row(i) = row.transpose();
        }
        return out;
    }

    /// Same basis truncated to a lower degree (prefix of this one).
    LeafBasis truncated(int degree) const {
        if (degree < 0 || degree > degree_)
            throw std::invalid_argument("LeafBasis: truncation degree out of range");
        return LeafBasis(family_, degree, measure_);
    }

    /// Numerical Gram matrix against the basis measure; identity up to
    /// quadrature round-off for a correct implementation.
    Eigen::MatrixXd gram() const {
        QuadratureRule rule = measure_.quadrature(degree_);
        Eigen::MatrixXd phi = eval(rule.nodes);
        return phi.transpose() * rule.weights.asDiagonal() * phi;
    }

private:
    PolyFamily family_ = PolyFamily::Legendre;
    int degree_ = 0;
    MarginalMeasure measure_ = MarginalMeasure::uniform(-1.0, 1.0);
};

/// Orthonormal Legendre-type basis of degrees 0..max_degree for the uniform
/// measure on [a,b].
inline LeafBasis legendre_basis(int max_degree, double a, double b) {
    return LeafBasis(PolyFamily::Legendre, max_degree, MarginalMeasure::uniform(a, b));
}

/// Orthonormal probabilists' Hermite basis of degrees 0..max_degree for the
/// standard Gaussian measure.
inline LeafBasis hermite_basis(int max_degree) {
    return LeafBasis(PolyFamily::Hermite, max_degree, MarginalMeasure::gaussian());
}

}  // namespace ttn

#endif
