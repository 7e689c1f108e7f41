#ifndef TTN_BENCHMARKS_HPP
#define TTN_BENCHMARKS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttn/tree_adaptation.hpp"

namespace ttn {

/// Henon-Heiles potential on R^d with the standard Gaussian measure:
/// u = 1/2 sum x_i^2 + s* sum (x_i x_{i+1}^2 - x_i^3)
///   + s*/16 sum (x_i^2 + x_{i+1}^2)^2.
inline Oracle henon_heiles(int d, double sigma_star = 0.2) {
    if (d < 2) throw std::invalid_argument("henon_heiles: d must be >= 2");
    return Oracle("henon-heiles", [d, sigma_star](const Eigen::VectorXd& x) {
        double quad = 0.0, cubic = 0.0, quartic = 0.0;
        for (int i = 0; i < d; ++i) quad += x(i) * x(i);
        for (int i = 0; i + 1 < d; ++i) {
            cubic += x(i) * x(i + 1) * x(i + 1) - x(i) * x(i) * x(i);
            double s = x(i) * x(i) + x(i + 1) * x(i + 1);
            quartic += s * s;
        }
        return 0.5 * quad + sigma_star * cubic + sigma_star / 16.0 * quartic;
    });
}

/// u(x) = 1/(10 + 2x_1 + x_3 + 2x_4 - x_5)^2 on [-1,1]^6, uniform measure.
inline Oracle anisotropic6() {
    return Oracle("anisotropic6", [](const Eigen::VectorXd& x) {
        double t = 10.0 + 2.0 * x(0) + x(2) + 2.0 * x(3) - x(4);
        return 1.0 / (t * t);
    });
}

/// Sum of bivariate blocks g(x_1,x_2) + g(x_3,x_4) + ... with
/// g(y,z) = sum_{i=0}^3 y^i z^i, on [-1,1]^d uniform; d must be even.
inline Oracle sum_bivariate(int d) {
    if (d < 2 || d % 2 != 0)
        throw std::invalid_argument("sum_bivariate: d must be even and >= 2");
    return Oracle("sum-bivariate", [d](const Eigen::VectorXd& x) {
        double total = 0.0;
        for (int nu = 0; nu + 1 < d; nu += 2) {
            double py = 1.0, pz = 1.0, block = 0.0;
            for (int i = 0; i <= 3; ++i) {
                block += py * pz;
                py *= x(nu);
                pz *= x(nu + 1);
            }
            total += block;
        }
        return total;
    });
}

/// Sum of interlaced trivariate blocks g(x_nu, x_{nu+1}, x_{nu+2}) with
/// g(y,z,w) = sum_{i=0}^2 y^i z^i w^i, on [-1,1]^d uniform; d must be >= 4.
inline Oracle sum_trivariate(int d) {
    if (d < 4) throw std::invalid_argument("sum_trivariate: d must be >= 4");
    return Oracle("sum-trivariate", [d](const Eigen::VectorXd& x) {
        double total = 0.0;
        for (int nu = 0; nu + 2 < d; ++nu) {
            double py = 1.0, pz = 1.0, pw = 1.0, block = 0.0;
            for (int i = 0; i <= 2; ++i) {
                block += py * pz * pw;
                py *= x(nu);
                pz *= x(nu + 1);
                pw *= x(nu + 2);
            }
            total += block;
        }
        return total;
    });
}

struct TestError {
    double value = 0.0;
    bool relative = true;  // false when the test norm of u vanished
};

/// Root-mean-square error over n_test i.i.d. mu draws, normalized by the
/// empirical norm of u (the reporting convention of the error tables);
/// falls back to the absolute error when that norm vanishes.
inline TestError test_error(const Oracle& u, const TreeTensorNetwork& network,
                            const ProductMeasure& mu, int n_test, Rng& rng) {
    if (n_test < 1) throw std::invalid_argument("test_error: n_test must be >= 1");
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_test; ++i) {
        Eigen::VectorXd x = mu.sample(rng);
        double exact = u(x);
        double approx = network.evaluate(x);
        num += (exact - approx) * (exact - approx);
        den += exact * exact;
    }
    TestError err;
    if (den > 0.0) {
        err.value = std::sqrt(num / den);
        err.relative = true;
    } else {
        err.value = std::sqrt(num / n_test);
        err.relative = false;
    }
    return err;
}

/// Nearest-rank quantile of level p in (0,1]: the ceil(p*N)-th smallest value.
inline double nearest_rank_quantile(std::vector<double> values, double p) {
    if (values.empty())
        throw std::invalid_argument("nearest_rank_quantile: empty sample");
    std::sort(values.begin(), values.end());
    int rank = static_cast<int>(std::ceil(p * values.size()));
    rank = std::min(std::max(rank, 1), static_cast<int>(values.size()));
    return values[rank - 1];
}

struct ExperimentConfig {
    std::string function = "henon-heiles";
    int dim = 8;
    std::vector<double> tolerances = {1e-4};
    std::string tree_mode = "balanced";  // balanced | rt | rbt | slo | file:PATH
    std::vector<NodeSet> tree_file_nodes;  // used with tree_mode "file:..."
    int trials = 10;
    int n_test = 1000;
    std::uint64_t seed = 0;
    int max_degree = 15;
    LearnerConfig learner;
    RankEstimationParams rank_estimation;
    PairingParams pairing;
};

struct TrialResult {
    bool ok = false;
    std::string message;
    double error = 0.0;
    bool error_relative = true;
    std::int64_t storage = 0;
    std::int64_t n = 0;
    std::int64_t n_optim = 0;
    std::int64_t n_total = 0;
    std::vector<NodeSet> level1_pairing;
    LearnReport learn_report;
};

struct ToleranceRow {
    double tolerance = 0.0;
    std::vector<TrialResult> trials;
    // nearest-rank quantiles over the successful trials
    double err_q10 = 0.0, err_q50 = 0.0, err_q90 = 0.0;
    std::int64_t s_q10 = 0, s_q50 = 0, s_q90 = 0;
    std::int64_t n_q10 = 0, n_q50 = 0, n_q90 = 0;
    std::int64_t ntot_q10 = 0, ntot_q50 = 0, ntot_q90 = 0;
    int failures = 0;
};

struct BenchmarkReport {
    ExperimentConfig config;
    std::vector<ToleranceRow> rows;
    bool all_ok = true;
};

inline Oracle make_oracle(const std::string& function, int dim) {
    if (function == "henon-heiles") return henon_heiles(dim);
    if (function == "anisotropic6") {
        if (dim != 6)
            throw std::invalid_argument("anisotropic6 is defined for dim 6");
        return anisotropic6();
    }
    if (function == "sum-bivariate") return sum_bivariate(dim);
    if (function == "sum-trivariate") return sum_trivariate(dim);
    throw std::invalid_argument("unknown function: " + function);
}

inline ProductMeasure make_measure(const std::string& function, int dim) {
    if (function == "henon-heiles") return ProductMeasure::gaussian(dim);
    return ProductMeasure::uniform(dim, -1.0, 1.0);
}

inline std::vector<LeafSpaceSequence> make_sequences(const std::string& function,
                                                     int dim, int max_degree) {
    LeafSpaceSequence seq;
    if (function == "henon-heiles") {
        seq.family = PolyFamily::Hermite;
        seq.measure = MarginalMeasure::gaussian();
    } else {
        seq.family = PolyFamily::Legendre;
        seq.measure = MarginalMeasure::uniform(-1.0, 1.0);
    }
    seq.max_degree = max_degree;
    return std::vector<LeafSpaceSequence>(dim, seq);
}

namespace detail {

inline void fill_quantiles(ToleranceRow& row) {
    std::vector<double> errs, storage, n, ntot;
    for (const auto& t : row.trials) {
        if (!t.ok) {
            ++row.failures;
            continue;
        }
        errs.push_back(t.error);
        storage.push_back(static_cast<double>(t.storage));
        n.push_back(static_cast<double>(t.n));
        ntot.push_back(static_cast<double>(t.n_total));
    }
    if (errs.empty()) return;
    row.err_q10 = nearest_rank_quantile(errs, 0.10);
    row.err_q50 = nearest_rank_quantile(errs, 0.50);
    row.err_q90 = nearest_rank_quantile(errs, 0.90);
    auto q = [](const std::vector<double>& v, double p) {
        return static_cast<std::int64_t>(nearest_rank_quantile(v, p));
    };
    row.s_q10 = q(storage, 0.10);
    row.s_q50 = q(storage, 0.50);
    row.s_q90 = q(storage, 0.90);
    row.n_q10 = q(n, 0.10);
    row.n_q50 = q(n, 0.50);
    row.n_q90 = q(n, 0.90);
    row.ntot_q10 = q(ntot, 0.10);
    row.ntot_q50 = q(ntot, 0.50);
    row.ntot_q90 = q(ntot, 0.90);
}

}  // namespace detail

/// One learning trial at one tolerance; the optional sink receives the
/// learned network (used by the CLI to keep the last model).
inline TrialResult run_single_trial(const ExperimentConfig& config, double tolerance,
                                    Rng trial_rng, TreeTensorNetwork* model_sink = nullptr) {
    TrialResult trial;
    try {
        Oracle u = make_oracle(config.function, config.dim);
        ProductMeasure mu = make_measure(config.function, config.dim);
        std::vector<LeafSpaceSequence> sequences =
            make_sequences(config.function, config.dim, config.max_degree);
        LearnerConfig learner = config.learner;
        learner.tolerance = tolerance;

        Rng learn_rng = trial_rng.fork(1);
        Rng test_rng = trial_rng.fork(2);

        TreeTensorNetwork network;
        if (config.tree_mode == "slo") {
            AdaptiveLearnConfig ac;
            ac.learner = learner;
            ac.rank_estimation = config.rank_estimation;
            ac.pairing = config.pairing;
            AdaptiveLearnResult res = learn_with_tree_adaptation(u, sequences, ac, learn_rng);
            network = res.network;
            trial.learn_report = res.report;
            trial.n = res.n;
            trial.n_optim = res.n_optim;
            trial.n_total = res.n_total;
            if (!res.level_pairings.empty()) trial.level1_pairing = res.level_pairings[0];
        } else {
            DimensionTree tree;
            if (config.tree_mode == "balanced") {
                tree = DimensionTree::balanced_binary(config.dim);
            } else if (config.tree_mode == "rt") {
                Rng tree_rng = trial_rng.fork(3);
                tree = DimensionTree::random_binary(config.dim, tree_rng);
            } else if (config.tree_mode == "rbt") {
                Rng tree_rng = trial_rng.fork(3);
                tree = DimensionTree::random_balanced(config.dim, tree_rng);
            } else if (config.tree_mode.rfind("file:", 0) == 0) {
                tree = DimensionTree::validate(config.tree_file_nodes);
            } else {
                throw std::invalid_argument("unknown tree mode: " + config.tree_mode);
            }
            LearnResult res = learn(u, tree, sequences, learner, learn_rng);
            network = res.network;
            trial.learn_report = res.report;
            trial.n = res.report.evaluations;
            trial.n_optim = 0;
            trial.n_total = trial.n;
        }

        trial.storage = network.storage();
        TestError err = test_error(u, network, mu, config.n_test, test_rng);
        trial.error = err.value;
        trial.error_relative = err.relative;
        trial.ok = true;
        if (model_sink) *model_sink = network;
    } catch (const std::exception& e) {
        trial.ok = false;
        trial.message = e.what();
    }
    return trial;
}

/// All trials over the tolerance grid with counter-derived per-trial seeds;
/// quantiles by the nearest-rank rule over the successful trials.
inline BenchmarkReport run_trials(const ExperimentConfig& config,
                                  TreeTensorNetwork* model_sink = nullptr) {
    BenchmarkReport report;
    report.config = config;
    Rng master(config.seed);
    for (std::size_t ti = 0; ti < config.tolerances.size(); ++ti) {
        ToleranceRow row;
        row.tolerance = config.tolerances[ti];
        Rng tol_rng = master.fork(ti);
        for (int trial = 0; trial < config.trials; ++trial) {
            TrialResult t =
                run_single_trial(config, row.tolerance, tol_rng.fork(trial), model_sink);
            report.all_ok = report.all_ok && t.ok;
            row.trials.push_back(std::move(t));
        }
        detail::fill_quantiles(row);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace ttn

#endif
