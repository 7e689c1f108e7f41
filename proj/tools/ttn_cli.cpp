#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "ttn/serialization.hpp"

namespace {

std::string default_adaptive_basis(const std::string& function) {
    // The block test functions are exactly representable at degree 3; the
    // others use the adaptive selection by default.
    if (function == "sum-bivariate" || function == "sum-trivariate") return "off";
    return "on";
}

bool parse_on_off(const std::string& v, const std::string& flag) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw CLI::ValidationError(flag + ": expected 'on' or 'off'");
}

void load_config_file(const std::string& path, ttn::ExperimentConfig& config) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config: cannot open " + path);
    ttn::json doc = ttn::json::parse(in);
    if (doc.contains("function")) config.function = doc["function"].get<std::string>();
    if (doc.contains("dim")) config.dim = doc["dim"].get<int>();
    if (doc.contains("tol")) {
        config.tolerances.clear();
        if (doc["tol"].is_array())
            for (const auto& t : doc["tol"]) config.tolerances.push_back(t.get<double>());
        else
            config.tolerances.push_back(doc["tol"].get<double>());
    }
    if (doc.contains("tree")) config.tree_mode = doc["tree"].get<std::string>();
    if (doc.contains("trials")) config.trials = doc["trials"].get<int>();
    if (doc.contains("n_test")) config.n_test = doc["n_test"].get<int>();
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("max_degree")) config.max_degree = doc["max_degree"].get<int>();
    if (doc.contains("degree")) config.learner.fixed_degree = doc["degree"].get<int>();
    if (doc.contains("adaptive_pca"))
        config.learner.adaptive_pca = doc["adaptive_pca"].get<bool>();
    if (doc.contains("adaptive_basis"))
        config.learner.adaptive_basis = doc["adaptive_basis"].get<bool>();
    if (doc.contains("k_pca")) config.learner.k_pca = doc["k_pca"].get<int>();
    if (doc.contains("repetitions"))
        config.learner.stability.repetitions = doc["repetitions"].get<int>();
    if (doc.contains("delta")) config.learner.stability.delta = doc["delta"].get<double>();
    if (doc.contains("eta")) config.learner.stability.eta = doc["eta"].get<double>();
    if (doc.contains("tol_coarse"))
        config.rank_estimation.eps_coarse = doc["tol_coarse"].get<double>();
    if (doc.contains("gamma1")) config.pairing.gamma1 = doc["gamma1"].get<double>();
    if (doc.contains("gamma2")) config.pairing.gamma2 = doc["gamma2"].get<double>();
    if (doc.contains("n_p")) config.pairing.n_p = doc["n_p"].get<int>();
}

void print_summary(const ttn::BenchmarkReport& report) {
    std::printf("%-10s %-9s %-9s %-9s %-7s %-7s %-7s %-7s %-9s %s\n", "tol",
                "logerr10", "logerr50", "logerr90", "S50", "n10", "n50", "n90",
                "ntot50", "fail");
    for (const auto& row : report.rows) {
        auto lg = [](double v) { return std::log10(std::max(v, 1e-300)); };
        std::printf("%-10.2e %-9.2f %-9.2f %-9.2f %-7lld %-7lld %-7lld %-7lld %-9lld %d\n",
                    row.tolerance, lg(row.err_q10), lg(row.err_q50), lg(row.err_q90),
                    static_cast<long long>(row.s_q50), static_cast<long long>(row.n_q10),
                    static_cast<long long>(row.n_q50), static_cast<long long>(row.n_q90),
                    static_cast<long long>(row.ntot_q50), row.failures);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree tensor network approximation of black-box functions"};
    app.require_subcommand(1);

    // ---- approximate ----
    auto* approx = app.add_subcommand(
        "approximate", "Learn a tree tensor network approximation over repeated trials");
    ttn::ExperimentConfig config;
    std::string config_path, adaptive_pca = "on", adaptive_basis = "auto";
    std::string out_model, out_report, out_report_json;
    std::vector<double> tol_flags;
    int degree_flag = -1;
    approx->add_option("--config", config_path, "JSON config file (flags override it)");
    approx->add_option("--function", config.function,
                       "henon-heiles | anisotropic6 | sum-bivariate | sum-trivariate");
    approx->add_option("--dim", config.dim, "number of variables d");
    approx->add_option("--tol", tol_flags, "target tolerance(s), e.g. --tol 1e-4 1e-5");
    approx->add_option("--tree", config.tree_mode,
                       "balanced | rt | rbt | slo | file:PATH");
    approx->add_option("--trials", config.trials, "number of repeated trials");
    approx->add_option("--n-test", config.n_test, "test sample size");
    approx->add_option("--seed", config.seed, "master seed");
    approx->add_option("--adaptive-pca", adaptive_pca, "on | off");
    approx->add_option("--adaptive-basis", adaptive_basis, "on | off | auto");
    approx->add_option("--max-degree", config.max_degree,
                       "largest candidate degree for basis adaptation");
    approx->add_option("--degree", degree_flag, "fixed leaf degree (adaptive basis off)");
    approx->add_option("--k-pca", config.learner.k_pca, "sampling factor for the PCA");
    approx->add_option("--repetitions", config.learner.stability.repetitions,
                       "boosted sampling repetitions M");
    approx->add_option("--delta", config.learner.stability.delta, "stability threshold");
    approx->add_option("--eta", config.learner.stability.eta, "failure probability");
    approx->add_option("--tol-coarse", config.rank_estimation.eps_coarse,
                       "coarse tolerance for rank estimation (slo)");
    approx->add_option("--gamma1", config.pairing.gamma1, "first swap exponent (slo)");
    approx->add_option("--gamma2", config.pairing.gamma2, "second swap exponent (slo)");
    approx->add_option("--n-p", config.pairing.n_p, "swap proposals per level (0: 2d)");
    approx->add_option("--out", out_model, "write the last learned model JSON here");
    approx->add_option("--report", out_report, "write the CSV report here");
    approx->add_option("--report-json", out_report_json, "write the JSON report here");

    // ---- rank ----
    auto* rank_cmd = app.add_subcommand("rank", "Estimate the rank of a variable group");
    std::string alpha_arg, rank_function = "henon-heiles";
    int rank_dim = 8;
    double tol_coarse = 1e-2;
    std::uint64_t rank_seed = 0;
    int cap_alpha = 30, cap_complement = 30;
    rank_cmd->add_option("--alpha", alpha_arg, "comma-separated variables, e.g. 1,2")
        ->required();
    rank_cmd->add_option("--function", rank_function, "test function name");
    rank_cmd->add_option("--dim", rank_dim, "number of variables d");
    rank_cmd->add_option("--tol-coarse", tol_coarse, "coarse tolerance");
    rank_cmd->add_option("--seed", rank_seed, "seed");
    rank_cmd->add_option("--cap-alpha", cap_alpha, "row sample size");
    rank_cmd->add_option("--cap-complement", cap_complement, "column cap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*approx) {
            if (!config_path.empty()) load_config_file(config_path, config);
            if (!tol_flags.empty()) config.tolerances = tol_flags;
            if (approx->count("--adaptive-pca"))
                config.learner.adaptive_pca = parse_on_off(adaptive_pca, "--adaptive-pca");
            if (adaptive_basis == "auto") adaptive_basis = default_adaptive_basis(config.function);
            config.learner.adaptive_basis = parse_on_off(adaptive_basis, "--adaptive-basis");
            if (degree_flag >= 0) config.learner.fixed_degree = degree_flag;
            if (config.tree_mode.rfind("file:", 0) == 0)
                config.tree_file_nodes = ttn::load_tree_nodes(config.tree_mode.substr(5));

            ttn::TreeTensorNetwork model;
            ttn::BenchmarkReport report =
                ttn::run_trials(config, out_model.empty() ? nullptr : &model);
            print_summary(report);

            if (!out_model.empty() && report.all_ok) ttn::save_model(model, out_model);
            if (!out_report.empty()) {
                std::ofstream csv(out_report);
                if (!csv) throw std::runtime_error("cannot open " + out_report);
                csv << ttn::to_csv(report);
                if (out_report_json.empty()) out_report_json = out_report + ".json";
            }
            if (!out_report_json.empty()) {
                std::ofstream js(out_report_json);
                if (!js) throw std::runtime_error("cannot open " + out_report_json);
                js << ttn::to_json(report).dump(2) << "\n";
            }
            return report.all_ok ? 0 : 1;
        }

        if (*rank_cmd) {
            ttn::NodeSet alpha;
            std::stringstream ss(alpha_arg);
            for (std::string part; std::getline(ss, part, ',');)
                alpha.push_back(std::stoi(part));
            ttn::Oracle u = ttn::make_oracle(rank_function, rank_dim);
            ttn::ProductMeasure mu = ttn::make_measure(rank_function, rank_dim);
            ttn::RankEstimationParams params;
            params.eps_coarse = tol_coarse;
            params.n_alpha = cap_alpha;
            params.n_complement = cap_complement;
            ttn::Rng rng(rank_seed);
            ttn::RankEstimate est = ttn::estimate_rank(u, alpha, mu, params, rng);
            std::printf("alpha={%s} rank=%d cost=%lld eps=%g%s\n",
                        ttn::node_to_string(est.alpha).c_str(), est.rank,
                        static_cast<long long>(est.cost), est.eps,
                        est.coarse ? " (cap reached)" : "");
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
