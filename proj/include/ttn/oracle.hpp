#ifndef TTN_ORACLE_HPP
#define TTN_ORACLE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

namespace ttn {

/// A black-box function with an internal monotone evaluation counter. The
/// counter is part of the cost accounting reported by the learners.
class Oracle {
public:
    Oracle() = default;
    Oracle(std::string name, std::function<double(const Eigen::VectorXd&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    double operator()(const Eigen::VectorXd& x) const {
        ++count_;
        return fn_(x);
    }

    /// Batch evaluation, one point per row.
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& points) const {
        Eigen::VectorXd out(points.rows());
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            out(i) = (*this)(Eigen::VectorXd(points.row(i).transpose()));
        return out;
    }

    const std::string& name() const { return name_; }
    std::int64_t count() const { return count_; }
    void reset_count() const { count_ = 0; }

private:
    std::string name_;
    std::function<double(const Eigen::VectorXd&)> fn_;
    mutable std::int64_t count_ = 0;
};

}  // namespace ttn

#endif
