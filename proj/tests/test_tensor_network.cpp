#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ttn/serialization.hpp"
#include "ttn/tensor_network.hpp"

using namespace ttn;

namespace {

Eigen::MatrixXd random_orthonormal(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

/// Random network on a given tree with all leaf dimensions `m` and interior
/// ranks bounded by `rmax`; orthonormal columns except at the root.
TreeTensorNetwork random_network(const DimensionTree& tree, int m, int rmax, Rng& rng,
                                 bool uniform_measure = true) {
    std::vector<LeafBasis> bases;
    for (int nu = 1; nu <= tree.dimension(); ++nu)
        bases.push_back(uniform_measure ? legendre_basis(m - 1, -1.0, 1.0)
                                        : hermite_basis(m - 1));
    RankTuple ranks(tree);
    for (int id = 0; id < tree.node_count(); ++id) {
        if (tree.is_root(id)) continue;
        ranks[id] = 1 + static_cast<int>(rng.below(rmax));
    }
    std::vector<Eigen::MatrixXd> factors(tree.node_count());
    for (int id : tree.nodes_by_decreasing_level()) {
        int rows = m;
        if (!tree.is_leaf(id)) {
            rows = 1;
            for (int c : tree.children(id)) rows *= ranks[c];
        }
        ranks[id] = std::min(ranks[id], rows);
        factors[id] = random_orthonormal(rows, ranks[id], rng);
    }
    int root_rows = 1;
    for (int c : tree.children(tree.root())) root_rows *= ranks[c];
    Eigen::MatrixXd root(root_rows, 1);
    for (int i = 0; i < root_rows; ++i) root(i, 0) = rng.gaussian();
    factors[tree.root()] = root;
    return TreeTensorNetwork(tree, bases, factors);
}

/// Brute-force value from the full coefficient tensor.
double full_tensor_eval(const TreeTensorNetwork& net, const Eigen::VectorXd& x) {
    Eigen::VectorXd coeff = net.full_coefficient_tensor();
    const int d = net.tree().dimension();
    std::vector<Eigen::VectorXd> phis(d);
    for (int nu = 1; nu <= d; ++nu) phis[nu - 1] = net.leaf_basis(nu).eval(x(nu - 1));
    double total = 0.0;
    std::vector<int> idx(d, 0);
    for (Eigen::Index flat = 0; flat < coeff.size(); ++flat) {
        double term = coeff(flat);
        for (int k = 0; k < d; ++k) term *= phis[k](idx[k]);
        total += term;
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[k] < phis[k].size()) break;
            idx[k] = 0;
        }
    }
    return total;
}

TreeTensorNetwork constant_one_network(int d) {
    DimensionTree tree = DimensionTree::balanced_binary(d);
    std::vector<LeafBasis> bases(d, legendre_basis(2, -1.0, 1.0));
    std::vector<Eigen::MatrixXd> factors(tree.node_count());
    for (int id = 0; id < tree.node_count(); ++id) {
        if (tree.is_leaf(id)) {
            Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 1);
            f(0, 0) = 1.0;
            factors[id] = f;
        } else {
            factors[id] = Eigen::MatrixXd::Ones(1, 1);
        }
    }
    return TreeTensorNetwork(tree, bases, factors);
}

}  // namespace

TEST_CASE("constant network evaluates to one everywhere") {
    TreeTensorNetwork net = constant_one_network(4);
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd x(4);
        for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-1.0, 1.0);
        CHECK(net.evaluate(x) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("rank-one product of degree-one factors") {
    // f(x) = phi_1(x_1) phi_1(x_2) on Legendre bases; f(1,1) = sqrt(3)^2 = 3
    DimensionTree tree = DimensionTree::balanced_binary(2);
    std::vector<LeafBasis> bases(2, legendre_basis(1, -1.0, 1.0));
    std::vector<Eigen::MatrixXd> factors(tree.node_count());
    for (int nu = 1; nu <= 2; ++nu) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 1);
        f(1, 0) = 1.0;
        factors[tree.leaf_of(nu)] = f;
    }
    factors[tree.root()] = Eigen::MatrixXd::Ones(1, 1);
    TreeTensorNetwork net(tree, bases, factors);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    CHECK(net.evaluate(ones) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("evaluation matches the full-tensor expansion oracle") {
    Rng rng(17);
    for (const auto& nodes :
         {std::vector<NodeSet>{{1}, {2}, {3}, {1, 2, 3}},
          std::vector<NodeSet>{{1}, {2}, {3}, {2, 3}, {1, 2, 3}},
          std::vector<NodeSet>{{1}, {3}, {1, 3}, {2}, {1, 2, 3}}}) {
        DimensionTree tree = DimensionTree::validate(nodes);
        TreeTensorNetwork net = random_network(tree, 3, 2, rng);
        for (int k = 0; k < 5; ++k) {
            Eigen::VectorXd x(3);
            for (int i = 0; i < 3; ++i) x(i) = rng.uniform(-1.0, 1.0);
            double direct = net.evaluate(x);
            double oracle = full_tensor_eval(net, x);
            CHECK(direct == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
}

TEST_CASE("multilinearity: scaling one factor scales the value") {
    Rng rng(3);
    DimensionTree tree = DimensionTree::balanced_binary(4);
    TreeTensorNetwork net = random_network(tree, 3, 2, rng);
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-1.0, 1.0);
    double base = net.evaluate(x);

    int some_leaf = tree.leaf_of(3);
    std::vector<Eigen::MatrixXd> factors;
    for (int id = 0; id < tree.node_count(); ++id) factors.push_back(net.factor(id));
    factors[some_leaf] *= -2.5;
    TreeTensorNetwork scaled(tree, net.leaf_bases(), factors);
    CHECK(scaled.evaluate(x) == doctest::Approx(-2.5 * base).epsilon(1e-12));
}

TEST_CASE("storage complexity formula") {
    SUBCASE("d=4 balanced, ranks 2, leaf dims 5") {
        DimensionTree tree = DimensionTree::balanced_binary(4);
        RankTuple ranks(tree);
        std::vector<int> leaf_dims(tree.node_count(), 0);
        for (int id = 0; id < tree.node_count(); ++id) {
            if (!tree.is_root(id)) ranks[id] = 2;
            if (tree.is_leaf(id)) leaf_dims[id] = 5;
        }
        // root 1*(2*2) + two interior 2*(2*2) + four leaves 2*5
        CHECK(storage_complexity(tree, ranks, leaf_dims) == 60);
    }
    SUBCASE("d=2 minimal") {
        DimensionTree tree = DimensionTree::balanced_binary(2);
        RankTuple ranks(tree);
        std::vector<int> leaf_dims(tree.node_count(), 0);
        for (int id : tree.leaves()) leaf_dims[id] = 1;
        CHECK(storage_complexity(tree, ranks, leaf_dims) == 3);
    }
    SUBCASE("matches the parameter count of a network") {
        Rng rng(21);
        DimensionTree tree = DimensionTree::balanced_binary(5);
        TreeTensorNetwork net = random_network(tree, 4, 3, rng);
        RankTuple ranks = net.ranks();
        std::vector<int> leaf_dims(tree.node_count(), 0);
        for (int id : tree.leaves()) leaf_dims[id] = 4;
        CHECK(storage_complexity(tree, ranks, leaf_dims) == net.storage());
    }
    SUBCASE("missing leaf dimension is an error") {
        DimensionTree tree = DimensionTree::balanced_binary(2);
        RankTuple ranks(tree);
        std::vector<int> leaf_dims(tree.node_count(), 0);
        CHECK_THROWS_AS(storage_complexity(tree, ranks, leaf_dims),
                        std::invalid_argument);
    }
}

TEST_CASE("alpha-matricization ranks") {
    SUBCASE("rank-one product function has rank one for every node") {
        TreeTensorNetwork net = constant_one_network(4);
        for (int id = 0; id < net.tree().node_count(); ++id) {
            if (net.tree().is_root(id)) continue;
            CHECK(net.alpha_matricization_rank(net.tree().node(id), 1e-10) == 1);
        }
    }
    SUBCASE("g(x1,x2) + h(x3,x4) has rank 2 over {1,2}") {
        DimensionTree tree = DimensionTree::balanced_binary(4);
        std::vector<LeafBasis> bases(4, legendre_basis(1, -1.0, 1.0));
        std::vector<Eigen::MatrixXd> factors(tree.node_count());
        for (int nu = 1; nu <= 4; ++nu)
            factors[tree.leaf_of(nu)] = Eigen::MatrixXd::Identity(2, 2);
        // pair factor columns span {1 (x) 1, phi1 (x) phi1}
        Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(4, 2);
        pair(0, 0) = 1.0;
        pair(3, 1) = 1.0;
        factors[tree.find({1, 2})] = pair;
        factors[tree.find({3, 4})] = pair;
        // root tensor: phi1phi1 (x) 1 + 1 (x) phi1phi1
        Eigen::MatrixXd root = Eigen::MatrixXd::Zero(4, 1);
        root(1 * 2 + 0, 0) = 1.0;
        root(0 * 2 + 1, 0) = 1.0;
        factors[tree.root()] = root;
        TreeTensorNetwork net(tree, bases, factors);
        CHECK(net.alpha_matricization_rank({1, 2}, 1e-10) == 2);
        CHECK(net.alpha_matricization_rank({1}, 1e-10) == 2);
    }
    SUBCASE("rank bounded by the representation ranks") {
        Rng rng(11);
        DimensionTree tree = DimensionTree::balanced_binary(5);
        TreeTensorNetwork net = random_network(tree, 3, 3, rng);
        for (int id = 0; id < tree.node_count(); ++id) {
            if (tree.is_root(id)) continue;
            CHECK(net.alpha_matricization_rank(tree.node(id), 1e-9) <= net.rank(id));
        }
    }
    SUBCASE("cap is enforced") {
        TreeTensorNetwork net = constant_one_network(4);
        CHECK_THROWS_AS(net.alpha_matricization_rank({1, 2}, 1e-10, 16),
                        std::runtime_error);
    }
}

TEST_CASE("serialization round trip is exact") {
    Rng rng(29);
    DimensionTree tree = DimensionTree::validate(
        {{1}, {2}, {3}, {4}, {5}, {2, 3}, {1, 2, 3}, {4, 5}, {1, 2, 3, 4, 5}});
    TreeTensorNetwork net = random_network(tree, 4, 3, rng, false);
    TreeTensorNetwork copy = deserialize(serialize(net));

    for (int id = 0; id < tree.node_count(); ++id)
        CHECK(copy.factor(id) == net.factor(id));  // bit identical
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd x(5);
        for (int i = 0; i < 5; ++i) x(i) = rng.gaussian();
        CHECK(copy.evaluate(x) == net.evaluate(x));
    }
}

TEST_CASE("serialization failure modes") {
    TreeTensorNetwork net = constant_one_network(2);
    json doc = to_json(net);

    SUBCASE("missing node tensor names the node") {
        doc["tensors"].erase("1,2");
        try {
            deserialize(doc);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("1,2") != std::string::npos);
        }
    }
    SUBCASE("unsupported version") {
        doc["version"] = 7;
        try {
            deserialize(doc);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    SUBCASE("malformed text") {
        CHECK_THROWS_AS(deserialize(std::string("{\"version\": 1,")),
                        std::runtime_error);
    }
    SUBCASE("inconsistent shapes") {
        doc["tensors"]["1"]["shape"] = {2, 1};
        CHECK_THROWS(deserialize(doc));
    }
}
