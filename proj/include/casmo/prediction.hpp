#pragma once

#include <span>
#include <string>
#include <vector>

#include "casmo/common.hpp"
#include "casmo/motifs.hpp"

namespace casmo {

// Rows are cascades, columns are features; NaN marks a missing cell (the
// pipeline emits whole missing rows when a cascade's networks do not reach
// far enough back). Missingness is data here, not an error.
struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::string> row_ids;
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
};

// Network-level summaries: mean over the 10 highest-ranked nodes for the
// nodal measures, one Shannon entropy of the degree distribution for the
// network itself. Smaller networks use every node.
struct CentralityFeatures {
    double degree_top_mean = 0.0;
    double degree_entropy = 0.0;
    double clustering_top_mean = 0.0;
    double pagerank_top_mean = 0.0;
    double betweenness_top_mean = 0.0;
};

std::vector<double> pagerank(const DenseGraph& g, double damping = 0.85, double tol = 1e-9);

// Brandes accumulation normalized by (n-1)(n-2), so values live in [0,1].
std::vector<double> betweenness_centrality(const DenseGraph& g);

double local_clustering(const DenseGraph& g, int v);

double degree_entropy(const DenseGraph& g);

CentralityFeatures centrality_features(const DenseGraph& g);

// Column means over non-missing cells (0 when a column is entirely missing).
std::vector<double> column_means(const std::vector<std::vector<double>>& rows,
                                 std::size_t n_cols);

// Replaces NaN cells; returns how many were filled.
std::size_t impute_missing(std::vector<std::vector<double>>& rows,
                           std::span<const double> means);

// Order-2 expansion: original columns, then squares, then pairwise products.
void polynomial_features(std::vector<std::vector<double>>& rows,
                         std::vector<std::string>& columns);

enum class Penalty { l1, l2 };

struct RegressionModel {
    std::vector<double> weights;  // original feature scale
    double intercept = 0.0;
    double eta = 0.0;
    Penalty penalty = Penalty::l1;
    std::vector<std::size_t> dropped_columns;  // zero variance in the fit data
    int sweeps = 0;

    double predict(std::span<const double> row) const;
};

// Minimizes sum of squared residuals plus eta times the L1 or squared-L2
// weight norm. Features are standardized and the target centered internally;
// the intercept is never penalized. L1 runs cyclic coordinate descent with
// soft thresholding (tolerance 1e-8 on the largest weight change, at most
// 10000 sweeps); L2 solves the ridge normal equations.
RegressionModel fit_regularized_linear(const std::vector<std::vector<double>>& rows,
                                       std::span<const double> y, double eta, Penalty penalty,
                                       double tol = 1e-8, int max_sweeps = 10000);

double r_squared(const RegressionModel& model, const std::vector<std::vector<double>>& rows,
                 std::span<const double> y);

// Best grid value by in-sample fit on the given data; ties keep the smallest.
double select_eta(const std::vector<std::vector<double>>& rows, std::span<const double> y,
                  std::span<const double> grid, Penalty penalty);

struct CrossValidationConfig {
    int folds = 10;
    std::vector<double> eta_grid = {0.01, 0.02, 0.03, 0.04};
    Penalty penalty = Penalty::l1;
    int poly_order = 1;  // 2 enables the quadratic expansion
    std::uint64_t seed = 0;
};

struct FoldReport {
    double mae = 0.0;
    double train_r2 = 0.0;
    double eta = 0.0;
    std::size_t test_rows = 0;
};

struct EvaluationReport {
    double mae = 0.0;           // over all held-out predictions
    double mean_train_r2 = 0.0;
    std::size_t imputed_cells = 0;
    std::vector<FoldReport> folds;
};

// Seeded shuffled fold assignment; per fold the imputation means, the
// standardization and the eta choice come from the training rows alone.
EvaluationReport cross_validate(const FeatureMatrix& data, const CrossValidationConfig& cfg);

}  // namespace casmo
