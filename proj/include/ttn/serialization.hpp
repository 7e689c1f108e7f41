#ifndef TTN_SERIALIZATION_HPP
#define TTN_SERIALIZATION_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ttn/benchmarks.hpp"

namespace ttn {

using json = nlohmann::json;

inline json to_json(const TreeTensorNetwork& network) {
    const DimensionTree& tree = network.tree();
    json doc;
    doc["version"] = 1;

    json tree_nodes = json::array();
    for (int id = 0; id < tree.node_count(); ++id) tree_nodes.push_back(tree.node(id));
    doc["tree"] = tree_nodes;

    json ranks = json::object();
    for (int id = 0; id < tree.node_count(); ++id)
        ranks[node_to_string(tree.node(id))] = network.rank(id);
    doc["ranks"] = ranks;

    json leaf_bases = json::object();
    for (int nu = 1; nu <= tree.dimension(); ++nu) {
        const LeafBasis& basis = network.leaf_basis(nu);
        json b;
        b["degree"] = basis.max_degree();
        if (basis.family() == PolyFamily::Legendre) {
            b["family"] = "legendre";
            b["interval"] = {basis.measure().lower(), basis.measure().upper()};
        } else {
            b["family"] = "hermite";
        }
        leaf_bases[std::to_string(nu)] = b;
    }
    doc["leaf_bases"] = leaf_bases;

    json tensors = json::object();
    for (int id = 0; id < tree.node_count(); ++id) {
        const Eigen::MatrixXd& f = network.factor(id);
        json t;
        t["shape"] = {f.rows(), f.cols()};
        json data = json::array();
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            for (Eigen::Index j = 0; j < f.cols(); ++j) data.push_back(f(i, j));
        t["data"] = std::move(data);
        tensors[node_to_string(tree.node(id))] = std::move(t);
    }
    doc["tensors"] = tensors;
    return doc;
}

inline std::string serialize(const TreeTensorNetwork& network) {
    return to_json(network).dump();
}

inline TreeTensorNetwork deserialize(const json& doc) {
    if (!doc.contains("version"))
        throw std::runtime_error("model: missing version field");
    if (doc["version"].get<int>() != 1)
        throw std::runtime_error("model: unsupported version " +
                                 doc["version"].dump());
    for (const char* key : {"tree", "ranks", "leaf_bases", "tensors"})
        if (!doc.contains(key))
            throw std::runtime_error(std::string("model: missing field ") + key);

    std::vector<NodeSet> nodes;
    for (const auto& n : doc["tree"]) nodes.push_back(n.get<NodeSet>());
    DimensionTree tree = DimensionTree::validate(nodes);

    std::vector<LeafBasis> leaf_bases(tree.dimension());
    for (int nu = 1; nu <= tree.dimension(); ++nu) {
        std::string key = std::to_string(nu);
        if (!doc["leaf_bases"].contains(key))
            throw std::runtime_error("model: missing leaf basis for variable " + key);
        const json& b = doc["leaf_bases"][key];
        std::string family = b["family"].get<std::string>();
        int degree = b["degree"].get<int>();
        if (family == "legendre") {
            double lo = b["interval"][0].get<double>();
            double hi = b["interval"][1].get<double>();
            leaf_bases[nu - 1] = legendre_basis(degree, lo, hi);
        } else if (family == "hermite") {
            leaf_bases[nu - 1] = hermite_basis(degree);
        } else {
            throw std::runtime_error("model: unknown basis family " + family);
        }
    }

    std::vector<Eigen::MatrixXd> factors(tree.node_count());
    for (int id = 0; id < tree.node_count(); ++id) {
        std::string key = node_to_string(tree.node(id));
        if (!doc["tensors"].contains(key))
            throw std::runtime_error("model: missing tensor for node {" + key + "}");
        const json& t = doc["tensors"][key];
        Eigen::Index rows = t["shape"][0].get<Eigen::Index>();
        Eigen::Index cols = t["shape"][1].get<Eigen::Index>();
        const json& data = t["data"];
        if (static_cast<Eigen::Index>(data.size()) != rows * cols)
            throw std::runtime_error("model: tensor data size mismatch for node {" +
                                     key + "}");
        Eigen::MatrixXd f(rows, cols);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) f(i, j) = data[k++].get<double>();
        factors[id] = std::move(f);
    }
    return TreeTensorNetwork(std::move(tree), std::move(leaf_bases), std::move(factors));
}

inline TreeTensorNetwork deserialize(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model: malformed document: ") + e.what());
    }
    return deserialize(doc);
}

inline void save_model(const TreeTensorNetwork& network, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << to_json(network).dump(2) << "\n";
}

inline TreeTensorNetwork load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

/// Tree file: a JSON array of variable lists, e.g. [[1],[2],[1,2]].
inline std::vector<NodeSet> load_tree_nodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json doc = json::parse(in);
    std::vector<NodeSet> nodes;
    for (const auto& n : doc) nodes.push_back(n.get<NodeSet>());
    return nodes;
}

inline json to_json(const NodeReport& node) {
    json j;
    j["node"] = node.vars;
    j["m"] = node.m;
    j["r"] = node.r;
    j["z"] = node.z;
    j["z_complement"] = node.z_complement;
    j["evaluations"] = node.evaluations;
    if (std::isfinite(node.loo)) j["loo"] = node.loo;
    j["tail_ratio"] = node.tail_ratio;
    j["certificate"] = node.certificate;
    j["tol_energy"] = node.tol_energy;
    j["tolerance_met"] = node.tolerance_met;
    j["degenerate"] = node.degenerate;
    if (node.degree >= 0) j["degree"] = node.degree;
    return j;
}

/// Canonical report serialization: timing is excluded so reports from equal
/// seeds compare bit-identically.
inline json to_json(const LearnReport& report, bool include_timing = false) {
    json j;
    json nodes = json::array();
    for (const auto& n : report.nodes) nodes.push_back(to_json(n));
    j["nodes"] = std::move(nodes);
    j["evaluations"] = report.evaluations;
    j["storage"] = report.storage;
    j["tolerance_met"] = report.tolerance_met;
    j["degenerate"] = report.degenerate;
    if (include_timing) j["wall_seconds"] = report.wall_seconds;
    return j;
}

inline json to_json(const BenchmarkReport& report, bool include_timing = false) {
    json j;
    json cfg;
    cfg["function"] = report.config.function;
    cfg["dim"] = report.config.dim;
    cfg["tolerances"] = report.config.tolerances;
    cfg["tree"] = report.config.tree_mode;
    cfg["trials"] = report.config.trials;
    cfg["n_test"] = report.config.n_test;
    cfg["seed"] = report.config.seed;
    cfg["max_degree"] = report.config.max_degree;
    cfg["adaptive_pca"] = report.config.learner.adaptive_pca;
    cfg["adaptive_basis"] = report.config.learner.adaptive_basis;
    j["config"] = cfg;
    j["all_ok"] = report.all_ok;

    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["tolerance"] = row.tolerance;
        r["failures"] = row.failures;
        r["err_q10"] = row.err_q10;
        r["err_q50"] = row.err_q50;
        r["err_q90"] = row.err_q90;
        r["S_q10"] = row.s_q10;
        r["S_q50"] = row.s_q50;
        r["S_q90"] = row.s_q90;
        r["n_q10"] = row.n_q10;
        r["n_q50"] = row.n_q50;
        r["n_q90"] = row.n_q90;
        r["n_total_q10"] = row.ntot_q10;
        r["n_total_q50"] = row.ntot_q50;
        r["n_total_q90"] = row.ntot_q90;
        json trials = json::array();
        for (const auto& t : row.trials) {
            json tj;
            tj["ok"] = t.ok;
            if (!t.ok) tj["message"] = t.message;
            tj["error"] = t.error;
            tj["error_relative"] = t.error_relative;
            tj["S"] = t.storage;
            tj["n"] = t.n;
            tj["n_optim"] = t.n_optim;
            tj["n_total"] = t.n_total;
            if (!t.level1_pairing.empty()) tj["level1_pairing"] = t.level1_pairing;
            tj["learn"] = to_json(t.learn_report, include_timing);
            trials.push_back(std::move(tj));
        }
        r["trials"] = std::move(trials);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

/// CSV mirroring the error-table columns; one row per tolerance.
inline std::string to_csv(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "tol,log_err_q10,log_err_q50,log_err_q90,"
           "S_q10,S_q50,S_q90,n_q10,n_q50,n_q90,"
           "n_total_q10,n_total_q50,n_total_q90\n";
    out.precision(6);
    auto log10_floored = [](double v) { return std::log10(std::max(v, 1e-300)); };
    for (const auto& row : report.rows) {
        out << row.tolerance << ',' << log10_floored(row.err_q10) << ','
            << log10_floored(row.err_q50) << ',' << log10_floored(row.err_q90) << ','
            << row.s_q10 << ',' << row.s_q50 << ',' << row.s_q90 << ',' << row.n_q10
            << ',' << row.n_q50 << ',' << row.n_q90 << ',' << row.ntot_q10 << ','
            << row.ntot_q50 << ',' << row.ntot_q90 << '\n';
    }
    return out.str();
}

}  // namespace ttn

#endif
