#ifndef TTN_MEASURES_HPP
#define TTN_MEASURES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ttn/quadrature.hpp"
#include "ttn/rng.hpp"

namespace ttn {

/// One-dimensional reference probability measure: uniform on a bounded
/// interval or the standard Gaussian on the real line.
class MarginalMeasure {
public:
    enum class Kind { Uniform, Gaussian };

    static MarginalMeasure uniform(double a, double b) {
        if (!(a < b))
            throw std::invalid_argument("MarginalMeasure: interval requires a < b");
        return MarginalMeasure(Kind::Uniform, a, b);
    }

    static MarginalMeasure gaussian() {
        return MarginalMeasure(Kind::Gaussian, 0.0, 0.0);
    }

    Kind kind() const { return kind_; }
    double lower() const { return a_; }
    double upper() const { return b_; }

    /// Support bounds used for gridded CDF work. The Gaussian is truncated to
    /// [-10,10]; the mass beyond is < 1e-22, below every tolerance in use.
    double grid_lower() const { return kind_ == Kind::Uniform ? a_ : -10.0; }
    double grid_upper() const { return kind_ == Kind::Uniform ? b_ : 10.0; }

    /// Lebesgue density of the measure at x.
    double density(double x) const {
        if (kind_ == Kind::Uniform) {
            return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
        }
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
    }

    double sample(Rng& rng) const {
        return kind_ == Kind::Uniform ? rng.uniform(a_, b_) : rng.gaussian();
    }

    /// Gauss rule matched to the measure; node count max(2*degree+1, 64) so
    /// Gram and density integrands of that polynomial degree are integrated
    /// exactly.
    QuadratureRule quadrature(int degree) const {
        int n = std::max(2 * degree + 1, 64);
        if (kind_ == Kind::Uniform)
            return scale_to_interval(gauss_legendre(n), a_, b_);
        return gauss_hermite(n);
    }

    bool operator==(const MarginalMeasure& o) const {
        return kind_ == o.kind_ && a_ == o.a_ && b_ == o.b_;
    }

private:
    MarginalMeasure(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

    Kind kind_;
    double a_, b_;
};

/// Product measure on X_1 x ... x X_d.
class ProductMeasure {
public:
    ProductMeasure() = default;
    explicit ProductMeasure(std::vector<MarginalMeasure> marginals)
        : marginals_(std::move(marginals)) {
        if (marginals_.empty())
            throw std::invalid_argument("ProductMeasure: d must be >= 1");
    }

    static ProductMeasure uniform(int d, double a, double b) {
        return ProductMeasure(
            std::vector<MarginalMeasure>(d, MarginalMeasure::uniform(a, b)));
    }

    static ProductMeasure gaussian(int d) {
        return ProductMeasure(
            std::vector<MarginalMeasure>(d, MarginalMeasure::gaussian()));
    }

    int dimension() const { return static_cast<int>(marginals_.size()); }

    /// Marginal of variable nu (1-based).
    const MarginalMeasure& marginal(int nu) const {
        if (nu < 1 || nu > dimension())
            throw std::out_of_range("ProductMeasure: variable index out of range");
        return marginals_[nu - 1];
    }

    /// Sub-measure for a subset of variables, preserving per-variable order.
    ProductMeasure restricted(const std::vector<int>& variables) const {
        std::vector<MarginalMeasure> sub;
        sub.reserve(variables.size());
        for (int nu : variables) sub.push_back(marginal(nu));
        return ProductMeasure(std::move(sub));
    }

    /// One i.i.d. draw from the product measure, coordinate by coordinate.
    Eigen::VectorXd sample(Rng& rng) const {
        Eigen::VectorXd x(dimension());
        for (int i = 0; i < dimension(); ++i) x(i) = marginals_[i].sample(rng);
        return x;
    }

private:
    std::vector<MarginalMeasure> marginals_;
};

}  // namespace ttn

#endif
