#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ttn/dimension_tree.hpp"

using namespace ttn;

namespace {

std::vector<NodeSet> six_var_tree() {
    return {{1}, {2}, {3}, {4}, {5}, {6}, {2, 3}, {1, 2, 3}, {4, 5, 6},
            {1, 2, 3, 4, 5, 6}};
}

void check_valid(const DimensionTree& tree) {
    // leaves are disjoint singletons covering {1..d}
    std::set<int> seen;
    for (int id : tree.leaves()) {
        REQUIRE(tree.is_leaf(id));
        REQUIRE(tree.node(id).size() == 1);
        CHECK(seen.insert(tree.node(id)[0]).second);
    }
    CHECK(static_cast<int>(seen.size()) == tree.dimension());
    // children before parents in the traversal
    std::set<int> visited;
    for (int id : tree.nodes_by_decreasing_level()) {
        for (int c : tree.children(id)) CHECK(visited.count(c) == 1);
        visited.insert(id);
    }
    CHECK(visited.count(tree.root()) == 0);
}

}  // namespace

TEST_CASE("six-variable tree with a shallow leaf validates") {
    DimensionTree tree = DimensionTree::validate(six_var_tree());
    CHECK(tree.depth() == 3);
    CHECK(tree.level(tree.find({2})) == 3);
    CHECK(tree.level(tree.find({1})) == 2);
    CHECK(tree.level(tree.find({2, 3})) == 2);
    CHECK(tree.level(tree.root()) == 0);
    check_valid(tree);
}

TEST_CASE("two-variable tree") {
    DimensionTree tree = DimensionTree::validate({{1}, {2}, {1, 2}});
    CHECK(tree.depth() == 1);
    CHECK(tree.node_count() == 3);
}

TEST_CASE("validation failures") {
    // children {1},{3} do not partition {1,2,3}
    CHECK_THROWS_AS(DimensionTree::validate({{1}, {3}, {1, 2, 3}}), std::invalid_argument);
    // missing root
    CHECK_THROWS_AS(DimensionTree::validate({{1}, {2}}), std::invalid_argument);
    // duplicate node
    CHECK_THROWS_AS(DimensionTree::validate({{1}, {1}, {2}, {1, 2}}),
                    std::invalid_argument);
    // multi-variable leaf
    CHECK_THROWS_AS(DimensionTree::validate({{1, 2}, {3}, {1, 2, 3}}),
                    std::invalid_argument);
    // interior node with a leaf child at a different depth than its sibling
    // subtree is fine
    CHECK_NOTHROW(DimensionTree::validate({{1}, {2}, {1, 2}, {1, 2, 3}, {3}}));
}

TEST_CASE("balanced binary trees") {
    CHECK_THROWS_AS(DimensionTree::balanced_binary(1), std::invalid_argument);

    DimensionTree t2 = DimensionTree::balanced_binary(2);
    CHECK(t2.node_count() == 3);
    CHECK(t2.depth() == 1);

    DimensionTree t4 = DimensionTree::balanced_binary(4);
    CHECK(t4.depth() == 2);
    CHECK(t4.find({1, 2}) >= 0);
    CHECK(t4.find({3, 4}) >= 0);

    DimensionTree t6 = DimensionTree::balanced_binary(6);
    CHECK(t6.depth() == 3);
    CHECK(t6.find({1, 2, 3}) >= 0);
    CHECK(t6.find({1, 2}) >= 0);
    CHECK(t6.find({3}) >= 0);
    check_valid(t6);
}

TEST_CASE("random binary trees validate and are reproducible") {
    CHECK_THROWS_AS([] {
        Rng rng(1);
        DimensionTree::random_binary(1, rng);
    }(), std::invalid_argument);

    {
        Rng rng(7);
        DimensionTree tree = DimensionTree::random_binary(2, rng);
        CHECK(tree.node_count() == 3);
    }
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 11ull}) {
        Rng rng(seed);
        DimensionTree tree = DimensionTree::random_binary(9, rng);
        check_valid(tree);
        for (int id = 0; id < tree.node_count(); ++id)
            if (!tree.is_leaf(id)) CHECK(tree.children(id).size() == 2);

        Rng rng2(seed);
        DimensionTree again = DimensionTree::random_binary(9, rng2);
        CHECK(again.all_nodes() == tree.all_nodes());
    }
    // d=3 has exactly three binary shapes, keyed by the top split
    std::set<std::vector<NodeSet>> shapes;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        shapes.insert(DimensionTree::random_binary(3, rng).all_nodes());
    }
    CHECK(shapes.size() == 3);
}

TEST_CASE("random balanced trees have the balanced shape") {
    for (std::uint64_t seed : {4ull, 9ull}) {
        Rng rng(seed);
        DimensionTree tree = DimensionTree::random_balanced(4, rng);
        CHECK(tree.depth() == 2);
        check_valid(tree);
    }
    Rng rng(123);
    DimensionTree t8 = DimensionTree::random_balanced(8, rng);
    CHECK(t8.depth() == 3);
    CHECK(t8.leaves().size() == 8);
    check_valid(t8);
}

TEST_CASE("traversal order is deepest-first with lexicographic ties") {
    DimensionTree t2 = DimensionTree::balanced_binary(2);
    auto order2 = t2.nodes_by_decreasing_level();
    REQUIRE(order2.size() == 2);
    CHECK(t2.node(order2[0]) == NodeSet{1});
    CHECK(t2.node(order2[1]) == NodeSet{2});

    DimensionTree tree = DimensionTree::validate(six_var_tree());
    auto order = tree.nodes_by_decreasing_level();
    auto pos = [&](const NodeSet& vars) {
        int id = tree.find(vars);
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == id) return static_cast<int>(i);
        return -1;
    };
    CHECK(pos({2}) < pos({2, 3}));
    CHECK(pos({3}) < pos({2, 3}));
    CHECK(pos({2, 3}) < pos({1, 2, 3}));
    CHECK(pos({1}) < pos({1, 2, 3}));
    CHECK(pos({4}) < pos({4, 5, 6}));
    CHECK(pos({5}) < pos({4, 5, 6}));
    CHECK(pos({6}) < pos({4, 5, 6}));
    for (int id : order) CHECK(id != tree.root());
}

TEST_CASE("complement") {
    DimensionTree tree = DimensionTree::validate(six_var_tree());
    CHECK(tree.complement(tree.find({2, 3})) == NodeSet{1, 4, 5, 6});
    CHECK(tree.complement(tree.root()).empty());
}
