#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ttn/bases.hpp"

using namespace ttn;

namespace {

// Quadrature oracle for 1D integrals against a marginal measure.
double integrate(const MarginalMeasure& mu, int degree,
                 const std::function<double(double)>& f) {
    QuadratureRule rule = mu.quadrature(degree);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights(i) * f(rule.nodes(i));
    return acc;
}

}  // namespace

TEST_CASE("marginal measures have unit mass") {
    for (const auto& mu : {MarginalMeasure::uniform(-1.0, 1.0),
                           MarginalMeasure::uniform(0.0, 3.5),
                           MarginalMeasure::gaussian()}) {
        double mass = integrate(mu, 10, [](double) { return 1.0; });
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(MarginalMeasure::uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MarginalMeasure::uniform(2.0, -1.0), std::invalid_argument);
}

TEST_CASE("product measure subset accessor preserves order") {
    ProductMeasure mu({MarginalMeasure::uniform(-1.0, 1.0), MarginalMeasure::gaussian(),
                       MarginalMeasure::uniform(0.0, 2.0)});
    ProductMeasure sub = mu.restricted({2, 3});
    CHECK(sub.dimension() == 2);
    CHECK(sub.marginal(1).kind() == MarginalMeasure::Kind::Gaussian);
    CHECK(sub.marginal(2).upper() == 2.0);
    CHECK_THROWS_AS(ProductMeasure(std::vector<MarginalMeasure>{}), std::invalid_argument);
}

TEST_CASE("legendre basis values") {
    LeafBasis basis = legendre_basis(2, -1.0, 1.0);

    SUBCASE("degree zero is the unit constant") {
        LeafBasis constant = legendre_basis(0, -1.0, 1.0);
        CHECK(constant.eval(0.37)(0) == doctest::Approx(1.0));
    }
    SUBCASE("normalized degree one at the endpoint") {
        CHECK(basis.eval(1.0)(1) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    }
    SUBCASE("endpoint values are sqrt(2k+1)") {
        Eigen::VectorXd v = basis.eval(1.0);
        CHECK(v(0) == doctest::Approx(1.0));
        CHECK(v(1) == doctest::Approx(std::sqrt(3.0)));
        CHECK(v(2) == doctest::Approx(std::sqrt(5.0)));
    }
    SUBCASE("odd degrees vanish at the interval center") {
        Eigen::VectorXd v = legendre_basis(5, -1.0, 1.0).eval(0.0);
        CHECK(v(0) == doctest::Approx(1.0));
        CHECK(v(1) == doctest::Approx(0.0));
        CHECK(v(3) == doctest::Approx(0.0));
        CHECK(v(5) == doctest::Approx(0.0));
    }
    SUBCASE("invalid interval is rejected") {
        CHECK_THROWS_AS(legendre_basis(2, 1.0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("hermite basis values") {
    LeafBasis basis = hermite_basis(3);
    CHECK(basis.eval(5.0)(0) == doctest::Approx(1.0));
    // He_2(x)/sqrt(2) = (x^2-1)/sqrt(2)
    CHECK(basis.eval(0.0)(2) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(basis.eval(0.0)(1) == doctest::Approx(0.0));
    CHECK(basis.eval(0.0)(3) == doctest::Approx(0.0));

    double ip = integrate(MarginalMeasure::gaussian(), 3, [&](double x) {
        Eigen::VectorXd v = basis.eval(x);
        return v(1) * v(2);
    });
    CHECK(std::abs(ip) < 1e-10);
}

TEST_CASE("gram matrices are the identity") {
    for (int degree : {3, 8, 15}) {
        for (const LeafBasis& basis :
             {legendre_basis(degree, -1.0, 1.0), legendre_basis(degree, 0.5, 4.0),
              hermite_basis(degree)}) {
            Eigen::MatrixXd gram = basis.gram();
            Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
            CHECK((gram - eye).norm() < 1e-10);
        }
    }
}

TEST_CASE("bases are nested: lower degree is a prefix") {
    LeafBasis big = legendre_basis(9, -1.0, 1.0);
    LeafBasis small = big.truncated(4);
    for (double x : {-0.9, -0.3, 0.2, 0.77}) {
        Eigen::VectorXd vb = big.eval(x);
        Eigen::VectorXd vs = small.eval(x);
        for (int j = 0; j < vs.size(); ++j) CHECK(vb(j) == doctest::Approx(vs(j)));
    }

    LeafBasis bigh = hermite_basis(9);
    for (double x : {-2.0, 0.4, 1.3}) {
        Eigen::VectorXd vb = bigh.eval(x);
        Eigen::VectorXd vs = bigh.truncated(6).eval(x);
        for (int j = 0; j < vs.size(); ++j) CHECK(vb(j) == doctest::Approx(vs(j)));
    }
}

TEST_CASE("family and measure must agree") {
    CHECK_THROWS_AS(LeafBasis(PolyFamily::Legendre, 2, MarginalMeasure::gaussian()),
                    std::invalid_argument);
    CHECK_THROWS_AS(LeafBasis(PolyFamily::Hermite, 2, MarginalMeasure::uniform(-1, 1)),
                    std::invalid_argument);
}

TEST_CASE("quadrature is exact for polynomial moments") {
    // uniform on [-1,1]: int x^4 = 1/5, gaussian: int x^4 = 3
    double m4u = integrate(MarginalMeasure::uniform(-1.0, 1.0), 4,
                           [](double x) { return x * x * x * x; });
    CHECK(m4u == doctest::Approx(0.2).epsilon(1e-13));
    double m4g = integrate(MarginalMeasure::gaussian(), 4,
                           [](double x) { return x * x * x * x; });
    CHECK(m4g == doctest::Approx(3.0).epsilon(1e-13));
}
