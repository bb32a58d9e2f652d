#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "casmo/prediction.hpp"
#include "oracles.hpp"

using namespace casmo;

namespace {

struct Problem {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
};

Problem random_problem(int n, int m, double noise, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (auto& x : w) x = g(rng);
  Problem p;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(m));
    for (auto& x : row) x = 2.0 * g(rng) + 1.0;
    double t = 0.5;
    for (int j = 0; j < m; ++j) t += w[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)];
    p.X.push_back(std::move(row));
    p.y.push_back(t + noise * g(rng));
  }
  return p;
}

// Unpenalized least squares through Eigen, as the reference.
std::vector<double> lstsq(const Problem& p) {
  const int n = static_cast<int>(p.X.size());
  const int m = static_cast<int>(p.X[0].size());
  Eigen::MatrixXd A(n, m + 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    for (int j = 0; j < m; ++j) A(i, j + 1) = p.X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    b(i) = p.y[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  return std::vector<double>(sol.data(), sol.data() + m + 1);  // intercept first
}

// Proximal gradient (ISTA) on the standardized lasso problem; slow but
// entirely independent of the coordinate descent path.
std::vector<double> ista_lasso(const Problem& p, double eta, int iters = 200000) {
  const std::size_t n = p.X.size();
  const std::size_t m = p.X[0].size();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  for (const auto& r : p.X)
    for (std::size_t j = 0; j < m; ++j) mean[j] += r[j];
  for (auto& v : mean) v /= static_cast<double>(n);
  for (const auto& r : p.X)
    for (std::size_t j = 0; j < m; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  for (auto& v : sd) v = std::sqrt(v / static_cast<double>(n));
  double ybar = std::accumulate(p.y.begin(), p.y.end(), 0.0) / static_cast<double>(n);

  std::vector<std::vector<double>> Z(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) Z[i][j] = (p.X[i][j] - mean[j]) / sd[j];

  std::vector<double> w(m, 0.0);
  // Lipschitz bound for the gradient of ||Zw - yc||^2
  double L = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) L += Z[i][j] * Z[i][j];
  L *= 2.0;
  double step = 1.0 / L;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> grad(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double r = -(p.y[i] - ybar);
      for (std::size_t j = 0; j < m; ++j) r += Z[i][j] * w[j];
      for (std::size_t j = 0; j < m; ++j) grad[j] += 2.0 * r * Z[i][j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      double u = w[j] - step * grad[j];
      double thr = step * eta;
      w[j] = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
    }
  }
  // back to original scale, intercept first
  std::vector<double> out(m + 1, 0.0);
  double b0 = ybar;
  for (std::size_t j = 0; j < m; ++j) {
    out[j + 1] = w[j] / sd[j];
    b0 -= w[j] / sd[j] * mean[j];
  }
  out[0] = b0;
  return out;
}

}  // namespace

TEST_CASE("zero penalty reproduces ordinary least squares") {
  Rng rng(3);
  auto p = random_problem(40, 4, 0.2, rng);
  auto ref = lstsq(p);
  for (Penalty pen : {Penalty::l1, Penalty::l2}) {
    auto model = fit_regularized_linear(p.X, p.y, 0.0, pen);
    CHECK(model.intercept == doctest::Approx(ref[0]).epsilon(1e-6));
    for (std::size_t j = 0; j < model.weights.size(); ++j)
      CHECK(model.weights[j] == doctest::Approx(ref[j + 1]).epsilon(1e-6));
  }
}

TEST_CASE("an exact linear law is recovered") {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 12; ++i) {
    X.push_back({static_cast<double>(i)});
    y.push_back(2.0 * i + 1.0);
  }
  auto m = fit_regularized_linear(X, y, 0.0, Penalty::l2);
  CHECK(m.weights[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.predict(std::vector<double>{100.0}) == doctest::Approx(201.0).epsilon(1e-9));
  CHECK(r_squared(m, X, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a crushing l1 penalty zeroes every weight") {
  Rng rng(5);
  auto p = random_problem(30, 3, 0.1, rng);
  auto m = fit_regularized_linear(p.X, p.y, 1e9, Penalty::l1);
  for (double w : m.weights) CHECK(w == 0.0);
  double ybar = std::accumulate(p.y.begin(), p.y.end(), 0.0) / static_cast<double>(p.y.size());
  CHECK(m.intercept == doctest::Approx(ybar).epsilon(1e-12));
}

TEST_CASE("coordinate descent agrees with proximal gradient") {
  Rng rng(7);
  auto p = random_problem(25, 3, 0.3, rng);
  double eta = 4.0;
  auto mine = fit_regularized_linear(p.X, p.y, eta, Penalty::l1);
  auto ref = ista_lasso(p, eta);
  CHECK(mine.intercept == doctest::Approx(ref[0]).epsilon(1e-4));
  for (std::size_t j = 0; j < mine.weights.size(); ++j)
    CHECK(mine.weights[j] == doctest::Approx(ref[j + 1]).epsilon(1e-4));
}

TEST_CASE("ridge matches the hand-solved normal equations") {
  // standardized single feature: ridge shrinks the slope by n/(n+eta)
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 8; ++i) {
    X.push_back({static_cast<double>(i)});
    y.push_back(3.0 * i);
  }
  double eta = 2.0;
  auto m = fit_regularized_linear(X, y, eta, Penalty::l2);
  // in standardized coordinates w* = z'yc / (z'z + eta) with z'z = n
  double n = 8.0;
  double mean = 3.5, sd = 0.0;
  for (int i = 0; i < 8; ++i) sd += (i - mean) * (i - mean);
  sd = std::sqrt(sd / n);
  double zy = 0.0;
  double ybar = 10.5;
  for (int i = 0; i < 8; ++i) zy += (i - mean) / sd * (3.0 * i - ybar);
  double w_std = zy / (n + eta);
  CHECK(m.weights[0] == doctest::Approx(w_std / sd).epsilon(1e-10));
}

TEST_CASE("zero-variance columns are dropped, not divided by") {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    X.push_back({5.0, static_cast<double>(i)});
    y.push_back(4.0 * i);
  }
  auto m = fit_regularized_linear(X, y, 0.0, Penalty::l2);
  REQUIRE(m.dropped_columns == std::vector<std::size_t>{0});
  CHECK(m.weights[0] == 0.0);
  CHECK(m.weights[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(m.predict(std::vector<double>{123.0, 2.0}) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("degenerate inputs raise evaluation errors") {
  std::vector<std::vector<double>> bad = {{1.0, 2.0}, {1.0}};
  std::vector<double> y = {1.0, 2.0};
  CHECK_THROWS_AS(fit_regularized_linear(bad, y, 0.0, Penalty::l2), EvaluationError);
  std::vector<std::vector<double>> nan_row = {{1.0}, {std::nan("")}};
  CHECK_THROWS_AS(fit_regularized_linear(nan_row, y, 0.0, Penalty::l2), EvaluationError);
  CHECK_THROWS_AS(fit_regularized_linear({}, {}, 0.0, Penalty::l2), EvaluationError);
  std::vector<std::vector<double>> ok = {{1.0}, {2.0}};
  CHECK_THROWS_AS(fit_regularized_linear(ok, y, -1.0, Penalty::l2), ConfigError);
}

TEST_CASE("eta selection keeps the smallest among ties") {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (int i = 0; i < 15; ++i) {
    X.push_back({static_cast<double>(i)});
    y.push_back(2.0 * i);
  }
  // on a perfectly linear problem every small eta fits essentially equally;
  // the tie rule must return the grid minimum
  std::vector<double> grid = {0.03, 0.01, 0.02};
  CHECK(select_eta(X, y, grid, Penalty::l2) == 0.01);
}

TEST_CASE("polynomial expansion appends squares and products") {
  std::vector<std::vector<double>> rows = {{2.0, 3.0}};
  std::vector<std::string> cols = {"a", "b"};
  polynomial_features(rows, cols);
  REQUIRE(cols.size() == 5);
  CHECK(cols[2] == "a^2");
  CHECK(cols[3] == "b^2");
  CHECK(cols[4] == "a*b");
  CHECK(rows[0] == std::vector<double>{2.0, 3.0, 4.0, 9.0, 6.0});
}

TEST_CASE("imputation fills missing cells with train means") {
  std::vector<std::vector<double>> rows = {{1.0, std::nan("")}, {3.0, 8.0}, {std::nan(""), 4.0}};
  auto means = column_means(rows, 2);
  CHECK(means[0] == 2.0);
  CHECK(means[1] == 6.0);
  auto filled = impute_missing(rows, means);
  CHECK(filled == 2);
  CHECK(rows[0][1] == 6.0);
  CHECK(rows[2][0] == 2.0);
}

TEST_CASE("centrality features on a star graph") {
  DenseGraph star(5);
  for (int i = 1; i < 5; ++i) star.add_edge(0, i);
  auto pr = pagerank(star);
  CHECK(pr[0] > pr[1]);
  CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  auto bc = betweenness_centrality(star);
  CHECK(bc[0] == doctest::Approx(1.0));  // center lies on every shortest path
  for (int i = 1; i < 5; ++i) CHECK(bc[i] == 0.0);
  CHECK(local_clustering(star, 0) == 0.0);

  DenseGraph tri(3);
  tri.add_edge(0, 1);
  tri.add_edge(1, 2);
  tri.add_edge(0, 2);
  CHECK(local_clustering(tri, 0) == 1.0);
  CHECK(degree_entropy(tri) == doctest::Approx(0.0));  // all degrees equal

  auto f = centrality_features(star);
  CHECK(f.degree_top_mean == doctest::Approx((4.0 + 1.0 * 4.0) / 5.0));
  CHECK(f.degree_entropy > 0.0);
}

TEST_CASE("betweenness matches the path-composition oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    auto g = oracle::random_connected(14, 0.2, rng);
    auto mine = betweenness_centrality(g);
    auto ref = oracle::betweenness_paths(g);
    REQUIRE(mine.size() == ref.size());
    for (std::size_t i = 0; i < mine.size(); ++i)
      CHECK(mine[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  }
}

TEST_CASE("cross-validation recovers a planted linear signal") {
  Rng rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix data;
  data.columns = {"x1", "x2"};
  double noise = 0.1;
  for (int i = 0; i < 60; ++i) {
    double x1 = g(rng), x2 = g(rng);
    data.rows.push_back({x1, x2});
    data.row_ids.push_back("r" + std::to_string(i));
    data.targets.push_back(3.0 * x1 + noise * g(rng));
  }
  CrossValidationConfig cfg;
  cfg.folds = 10;
  cfg.penalty = Penalty::l1;
  cfg.seed = 99;
  auto rep = cross_validate(data, cfg);
  REQUIRE(rep.folds.size() == 10);
  // expected MAE of pure N(0, 0.1) noise is 0.1 * sqrt(2/pi) ~ 0.08
  CHECK(rep.mae < 0.15);
  CHECK(rep.mean_train_r2 > 0.98);
  CHECK(rep.imputed_cells == 0);
  std::size_t rows = 0;
  for (const auto& f : rep.folds) rows += f.test_rows;
  CHECK(rows == 60);

  // an intercept-only baseline is far worse
  FeatureMatrix flat = data;
  for (auto& r : flat.rows) r = {1.0};
  flat.columns = {"one"};
  auto base = cross_validate(flat, cfg);
  CHECK(base.mae > 5.0 * rep.mae);
}

TEST_CASE("cross-validation is deterministic in the seed") {
  Rng rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix data;
  data.columns = {"x"};
  for (int i = 0; i < 30; ++i) {
    double x = g(rng);
    data.rows.push_back({x});
    data.row_ids.push_back("r" + std::to_string(i));
    data.targets.push_back(x + 0.3 * g(rng));
  }
  CrossValidationConfig cfg;
  cfg.folds = 5;
  cfg.seed = 4;
  auto a = cross_validate(data, cfg);
  auto b = cross_validate(data, cfg);
  CHECK(a.mae == b.mae);
  cfg.seed = 5;
  auto c = cross_validate(data, cfg);
  CHECK(a.mae != c.mae);
}

TEST_CASE("fold imputation means come from training rows alone") {
  // replicate the documented fold assignment to find one test row, poison the
  // training mean, and check the held-out prediction uses it
  const std::size_t n = 20;
  CrossValidationConfig cfg;
  cfg.folds = 4;
  cfg.seed = 21;
  cfg.eta_grid = {0.0};
  cfg.penalty = Penalty::l2;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), Rng(cfg.seed));
  // fold f holds positions p with p % folds == f
  std::vector<int> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    fold_of[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(cfg.folds));

  FeatureMatrix data;
  data.columns = {"x"};
  for (std::size_t i = 0; i < n; ++i) {
    double x = static_cast<double>(i * i);  // subset means stay distinct
    data.row_ids.push_back("r" + std::to_string(i));
    data.rows.push_back({x});
    data.targets.push_back(2.0 * x);
  }
  std::size_t missing_row = 0;
  while (fold_of[missing_row] != 0) ++missing_row;
  data.rows[missing_row] = {std::numeric_limits<double>::quiet_NaN()};

  auto rep = cross_validate(data, cfg);
  REQUIRE(rep.folds.size() == 4);
  // the missing cell is imputed once per fold: as a test cell in fold 0 and
  // as a training cell in the other three
  CHECK(rep.imputed_cells == 4);

  // train-only mean of x for fold 0; a leaky mean over all non-missing rows
  // would differ and shift the fold error
  double train_mean = 0.0, leaky_mean = 0.0;
  std::size_t train_cnt = 0, leaky_cnt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == missing_row) continue;
    leaky_mean += data.rows[i][0];
    ++leaky_cnt;
    if (fold_of[i] != 0) {
      train_mean += data.rows[i][0];
      ++train_cnt;
    }
  }
  train_mean /= static_cast<double>(train_cnt);
  leaky_mean /= static_cast<double>(leaky_cnt);
  REQUIRE(std::abs(train_mean - leaky_mean) > 1.0);

  // on clean linear data the model is y = 2x, every other fold-0 row predicts
  // exactly, so the fold error is the imputed row's alone
  double fold_sum = rep.folds[0].mae * static_cast<double>(rep.folds[0].test_rows);
  double want = std::abs(2.0 * train_mean - data.targets[missing_row]);
  double leaky = std::abs(2.0 * leaky_mean - data.targets[missing_row]);
  CHECK(fold_sum == doctest::Approx(want).epsilon(1e-9));
  CHECK(std::abs(fold_sum - leaky) > 0.5);
}
