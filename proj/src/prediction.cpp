#include "casmo/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace casmo {

std::vector<double> pagerank(const DenseGraph& g, double damping, double tol) {
    int n = g.node_count();
    if (n == 0) return {};
    std::vector<double> pr(static_cast<std::size_t>(n), 1.0 / n);
    std::vector<double> next(static_cast<std::size_t>(n));
    for (int iter = 0; iter < 10000; ++iter) {
        double dangling = 0.0;
        for (int v = 0; v < n; ++v)
            if (g.degree(v) == 0) dangling += pr[static_cast<std::size_t>(v)];
        double base = (1.0 - damping) / n + damping * dangling / n;
        std::fill(next.begin(), next.end(), base);
        for (int v = 0; v < n; ++v) {
            double share = damping * pr[static_cast<std::size_t>(v)] / std::max(1, g.degree(v));
            for (int u : g.neighbors(v)) next[static_cast<std::size_t>(u)] += share;
        }
        double delta = 0.0;
        for (int v = 0; v < n; ++v) delta += std::abs(next[static_cast<std::size_t>(v)] - pr[static_cast<std::size_t>(v)]);
        pr.swap(next);
        if (delta < tol) break;
    }
    return pr;
}

std::vector<double> betweenness_centrality(const DenseGraph& g) {
    int n = g.node_count();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    if (n < 3) return acc;

    std::vector<int> dist(static_cast<std::size_t>(n));
    std::vector<double> sigma(static_cast<std::size_t>(n));
    std::vector<double> delta(static_cast<std::size_t>(n));
    std::vector<int> order;
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
    std::vector<int> queue;

    for (int s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        for (auto& p : preds) p.clear();
        order.clear();
        queue.clear();

        dist[static_cast<std::size_t>(s)] = 0;
        sigma[static_cast<std::size_t>(s)] = 1.0;
        queue.push_back(s);
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            int v = queue[qi];
            order.push_back(v);
            for (int w : g.neighbors(v)) {
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    queue.push_back(w);
                }
                if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
                    sigma[static_cast<std::size_t>(w)] += sigma[static_cast<std::size_t>(v)];
                    preds[static_cast<std::size_t>(w)].push_back(v);
                }
            }
        }
        for (std::size_t i = order.size(); i-- > 0;) {
            int w = order[i];
            for (int v : preds[static_cast<std::size_t>(w)])
                delta[static_cast<std::size_t>(v)] += sigma[static_cast<std::size_t>(v)] /
                                                      sigma[static_cast<std::size_t>(w)] *
                                                      (1.0 + delta[static_cast<std::size_t>(w)]);
            if (w != s) acc[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
        }
    }
    double norm = static_cast<double>(n - 1) * (n - 2);
    for (double& v : acc) v /= norm;
    return acc;
}

double local_clustering(const DenseGraph& g, int v) {
    int d = g.degree(v);
    if (d < 2) return 0.0;
    auto nbrs = g.neighbors(v);
    int links = 0;
    for (std::size_t i = 0; i < nbrs.size(); ++i)
        for (std::size_t j = i + 1; j < nbrs.size(); ++j)
            if (g.has_edge(nbrs[i], nbrs[j])) ++links;
    return 2.0 * links / (static_cast<double>(d) * (d - 1));
}

double degree_entropy(const DenseGraph& g) {
    int n = g.node_count();
    if (n == 0) return 0.0;
    std::map<int, int> hist;
    for (int v = 0; v < n; ++v) ++hist[g.degree(v)];
    double h = 0.0;
    for (const auto& [deg, cnt] : hist) {
        double p = static_cast<double>(cnt) / n;
        h -= p * std::log(p);
    }
    return h;
}

namespace {

double top_mean(std::vector<double> values, std::size_t top = 10) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end(), std::greater<>());
    std::size_t take = std::min(top, values.size());
    double sum = std::accumulate(values.begin(), values.begin() + static_cast<long>(take), 0.0);
    return sum / static_cast<double>(take);
}

}  // namespace

CentralityFeatures centrality_features(const DenseGraph& g) {
    int n = g.node_count();
    CentralityFeatures f;
    std::vector<double> deg(static_cast<std::size_t>(n));
    std::vector<double> clus(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        deg[static_cast<std::size_t>(v)] = g.degree(v);
        clus[static_cast<std::size_t>(v)] = local_clustering(g, v);
    }
    f.degree_top_mean = top_mean(deg);
    f.degree_entropy = degree_entropy(g);
    f.clustering_top_mean = top_mean(clus);
    f.pagerank_top_mean = top_mean(pagerank(g));
    f.betweenness_top_mean = top_mean(betweenness_centrality(g));
    return f;
}

std::vector<double> column_means(const std::vector<std::vector<double>>& rows,
                                 std::size_t n_cols) {
    std::vector<double> sum(n_cols, 0.0);
    std::vector<std::size_t> cnt(n_cols, 0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < n_cols; ++j)
            if (!std::isnan(r[j])) {
                sum[j] += r[j];
                ++cnt[j];
            }
    for (std::size_t j = 0; j < n_cols; ++j) sum[j] = cnt[j] ? sum[j] / static_cast<double>(cnt[j]) : 0.0;
    return sum;
}

std::size_t impute_missing(std::vector<std::vector<double>>& rows,
                           std::span<const double> means) {
    std::size_t filled = 0;
    for (auto& r : rows)
        for (std::size_t j = 0; j < means.size(); ++j)
            if (std::isnan(r[j])) {
                r[j] = means[j];
                ++filled;
            }
    return filled;
}

void polynomial_features(std::vector<std::vector<double>>& rows,
                         std::vector<std::string>& columns) {
    std::size_t m = columns.size();
    for (std::size_t a = 0; a < m; ++a) columns.push_back(columns[a] + "^2");
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) columns.push_back(columns[a] + "*" + columns[b]);
    for (auto& r : rows) {
        r.reserve(columns.size());
        for (std::size_t a = 0; a < m; ++a) r.push_back(r[a] * r[a]);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) r.push_back(r[a] * r[b]);
    }
}

double RegressionModel::predict(std::span<const double> row) const {
    double y = intercept;
    for (std::size_t j = 0; j < weights.size() && j < row.size(); ++j) y += weights[j] * row[j];
    return y;
}

RegressionModel fit_regularized_linear(const std::vector<std::vector<double>>& rows,
                                       std::span<const double> y, double eta, Penalty penalty,
                                       double tol, int max_sweeps) {
    std::size_t n = rows.size();
    if (n == 0 || y.size() != n) throw EvaluationError("regression needs matching X and y");
    if (eta < 0.0) throw ConfigError("penalty strength must be non-negative");
    std::size_t m = rows.empty() ? 0 : rows[0].size();
    for (const auto& r : rows)
        if (r.size() != m) throw EvaluationError("ragged feature matrix");
    for (const auto& r : rows)
        for (double v : r)
            if (std::isnan(v)) throw EvaluationError("regression input still has missing cells");

    RegressionModel model;
    model.eta = eta;
    model.penalty = penalty;
    model.weights.assign(m, 0.0);

    // Standardize columns; constant columns are dropped.
    std::vector<double> mean(m, 0.0), sd(m, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < m; ++j) mean[j] += r[j];
    for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < m; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < m; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] > 0.0) active.push_back(j);
        else model.dropped_columns.push_back(j);
    }

    double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::size_t p = active.size();
    if (p == 0) {
        model.intercept = ybar;
        return model;
    }

    Eigen::MatrixXd X(static_cast<long>(n), static_cast<long>(p));
    Eigen::VectorXd yc(static_cast<long>(n));
    for (std::size_t i = 0; i < n; ++i) {
        yc[static_cast<long>(i)] = y[i] - ybar;
        for (std::size_t j = 0; j < p; ++j)
            X(static_cast<long>(i), static_cast<long>(j)) =
                (rows[i][active[j]] - mean[active[j]]) / sd[active[j]];
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<long>(p));
    if (penalty == Penalty::l2) {
        Eigen::MatrixXd gram = X.transpose() * X;
        gram.diagonal().array() += eta;
        w = gram.ldlt().solve(X.transpose() * yc);
        model.sweeps = 1;
    } else {
        // Cyclic coordinate descent minimizing ||yc - Xw||^2 + eta*|w|_1.
        Eigen::VectorXd colsq(static_cast<long>(p));
        for (std::size_t j = 0; j < p; ++j) colsq[static_cast<long>(j)] = X.col(static_cast<long>(j)).squaredNorm();
        Eigen::VectorXd resid = yc;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_change = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                long jj = static_cast<long>(j);
                double wj = w[jj];
                double rho = X.col(jj).dot(resid) + colsq[jj] * wj;
                double thresh = eta / 2.0;
                double next = 0.0;
                if (rho > thresh) next = (rho - thresh) / colsq[jj];
                else if (rho < -thresh) next = (rho + thresh) / colsq[jj];
                if (next != wj) {
                    resid += X.col(jj) * (wj - next);
                    w[jj] = next;
                    max_change = std::max(max_change, std::abs(next - wj));
                }
            }
            model.sweeps = sweep + 1;
            if (max_change < tol) break;
        }
    }

    // Back to original scale.
    model.intercept = ybar;
    for (std::size_t j = 0; j < p; ++j) {
        double wj = w[static_cast<long>(j)] / sd[active[j]];
        model.weights[active[j]] = wj;
        model.intercept -= wj * mean[active[j]];
    }
    return model;
}

double r_squared(const RegressionModel& model, const std::vector<std::vector<double>>& rows,
                 std::span<const double> y) {
    double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double e = y[i] - model.predict(rows[i]);
        ss_res += e * e;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    if (!(ss_tot > 0.0)) return 0.0;
    return 1.0 - ss_res / ss_tot;
}

double select_eta(const std::vector<std::vector<double>>& rows, std::span<const double> y,
                  std::span<const double> grid, Penalty penalty) {
    if (grid.empty()) throw ConfigError("eta grid must be non-empty");
    double best_eta = grid[0];
    double best_r2 = -std::numeric_limits<double>::infinity();
    for (double eta : grid) {
        RegressionModel m = fit_regularized_linear(rows, y, eta, penalty);
        double r2 = r_squared(m, rows, y);
        if (r2 > best_r2) {
            best_r2 = r2;
            best_eta = eta;
        }
    }
    return best_eta;
}

EvaluationReport cross_validate(const FeatureMatrix& data, const CrossValidationConfig& cfg) {
    std::size_t n = data.rows.size();
    if (n < 2) throw EvaluationError("cross-validation needs at least 2 rows");
    if (data.targets.size() != n) throw EvaluationError("target count mismatch");
    int folds = cfg.folds;
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        throw ConfigError("fold count must lie in [2, n]");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(cfg.seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    EvaluationReport report;
    double abs_err_sum = 0.0;
    std::size_t held_out = 0;
    double r2_sum = 0.0;

    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t pos = 0; pos < n; ++pos)
            (static_cast<int>(pos % static_cast<std::size_t>(folds)) == f ? test_idx : train_idx)
                .push_back(perm[pos]);
        if (test_idx.empty() || train_idx.empty()) continue;

        std::vector<std::vector<double>> Xtr, Xte;
        std::vector<double> ytr, yte;
        for (std::size_t i : train_idx) {
            Xtr.push_back(data.rows[i]);
            ytr.push_back(data.targets[i]);
        }
        for (std::size_t i : test_idx) {
            Xte.push_back(data.rows[i]);
            yte.push_back(data.targets[i]);
        }

        // Train-only imputation; test cells borrow the train means.
        std::vector<double> means = column_means(Xtr, data.columns.size());
        report.imputed_cells += impute_missing(Xtr, means);
        report.imputed_cells += impute_missing(Xte, means);

        std::vector<std::string> cols = data.columns;
        if (cfg.poly_order >= 2) {
            polynomial_features(Xtr, cols);
            std::vector<std::string> cols2 = data.columns;
            polynomial_features(Xte, cols2);
        }

        double eta = select_eta(Xtr, ytr, cfg.eta_grid, cfg.penalty);
        RegressionModel model = fit_regularized_linear(Xtr, ytr, eta, cfg.penalty);

        FoldReport fr;
        fr.eta = eta;
        fr.train_r2 = r_squared(model, Xtr, ytr);
        fr.test_rows = test_idx.size();
        double fold_err = 0.0;
        for (std::size_t i = 0; i < Xte.size(); ++i) {
            double e = std::abs(yte[i] - model.predict(Xte[i]));
            fold_err += e;
            abs_err_sum += e;
        }
        held_out += test_idx.size();
        fr.mae = fold_err / static_cast<double>(test_idx.size());
        r2_sum += fr.train_r2;
        report.folds.push_back(fr);
    }

    report.mae = abs_err_sum / static_cast<double>(held_out);
    report.mean_train_r2 = report.folds.empty() ? 0.0 : r2_sum / static_cast<double>(report.folds.size());
    return report;
}

}  // namespace casmo
