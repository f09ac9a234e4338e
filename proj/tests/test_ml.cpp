#include <catch2/catch_amalgamated.hpp>

#include <eegtopo/classify.hpp>
#include <eegtopo/svm.hpp>
#include <eegtopo/util.hpp>

#include <cmath>
#include <vector>

using namespace eegtopo;

namespace {

double rbf(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
           double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

// Dual objective 0.5*a'Qa - e'a recovered from a trained model. Points with
// alpha = 0 contribute nothing, so the support vectors carry everything.
double dual_from_model(const RbfSvm& m) {
  const Eigen::MatrixXd& sv = m.support_vectors();
  const Eigen::VectorXd& co = m.coefficients();  // alpha_i * y_i
  double obj = 0.0;
  for (Eigen::Index i = 0; i < sv.rows(); ++i)
    for (Eigen::Index j = 0; j < sv.rows(); ++j)
      obj += 0.5 * co[i] * co[j] * rbf(sv.row(i), sv.row(j), m.gamma());
  for (Eigen::Index i = 0; i < co.size(); ++i) obj -= std::abs(co[i]);
  return obj;
}

// Exhaustive oracle: enumerate the first n-1 multipliers on a grid over
// [0, C] and solve the last one from the equality constraint. Keeps only
// box-feasible points, returns the best (smallest) dual value seen.
double exhaustive_dual_min(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           double c, double gamma, int steps) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] *
                rbf(x.row(i), x.row(j), gamma);

  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  double best = std::numeric_limits<double>::infinity();
  const double step = c / (steps - 1);

  std::vector<int> digit(static_cast<std::size_t>(n - 1), 0);
  while (true) {
    for (int i = 0; i < n - 1; ++i)
      alpha[static_cast<std::size_t>(i)] = digit[static_cast<std::size_t>(i)] * step;
    double partial = 0.0;
    for (int i = 0; i < n - 1; ++i)
      partial += alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    const double last = -partial * y[static_cast<std::size_t>(n - 1)];
    if (last >= 0.0 && last <= c) {
      alpha[static_cast<std::size_t>(n - 1)] = last;
      double obj = 0.0;
      for (int i = 0; i < n; ++i) {
        obj -= alpha[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j)
          obj += 0.5 * alpha[static_cast<std::size_t>(i)] *
                 alpha[static_cast<std::size_t>(j)] * q(i, j);
      }
      best = std::min(best, obj);
    }
    int d = 0;
    while (d < n - 1 && ++digit[static_cast<std::size_t>(d)] == steps) {
      digit[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == n - 1) break;
  }
  return best;
}

// Box + equality + margin conditions checked through the public decision
// function only.
void check_kkt(const RbfSvm& m, const Eigen::MatrixXd& x,
               const std::vector<int>& y, double c, double kkt_tol) {
  const Eigen::VectorXd& co = m.coefficients();
  double alpha_y_sum = 0.0;
  for (Eigen::Index i = 0; i < co.size(); ++i) {
    const double a = std::abs(co[i]);
    CHECK(a > 0.0);
    CHECK(a <= c + 1e-6 * c);
    alpha_y_sum += co[i];
  }
  CHECK(std::abs(alpha_y_sum) <= 1e-6 * c);

  // recover each training point's multiplier (0 when it is not a support
  // vector; rows are copied verbatim so exact matching works)
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double a = 0.0;
    for (Eigen::Index s = 0; s < m.support_vectors().rows(); ++s)
      if (m.support_vectors().row(s) == x.row(i)) a = std::abs(co[s]);
    const double margin =
        y[static_cast<std::size_t>(i)] * m.decision_value(x.row(i));
    if (a <= 1e-6 * c) {
      CHECK(margin >= 1.0 - kkt_tol);
    } else if (a >= c - 1e-6 * c) {
      CHECK(margin <= 1.0 + kkt_tol);
    } else {
      CHECK(std::abs(margin - 1.0) <= kkt_tol);
    }
  }
}

Eigen::MatrixXd blob_data(int per_class, double sep, std::uint64_t seed,
                          std::vector<int>& y) {
  GaussianRng rng(seed);
  Eigen::MatrixXd x(2 * per_class, 2);
  y.clear();
  for (int i = 0; i < per_class; ++i) {
    x(i, 0) = rng.normal(-sep, 1.0);
    x(i, 1) = rng.normal(-sep, 1.0);
    y.push_back(1);
  }
  for (int i = 0; i < per_class; ++i) {
    x(per_class + i, 0) = rng.normal(sep, 1.0);
    x(per_class + i, 1) = rng.normal(sep, 1.0);
    y.push_back(-1);
  }
  return x;
}

}  // namespace

TEST_CASE("smo solves the two-point problem exactly") {
  Eigen::MatrixXd x(2, 2);
  x << 0.0, 0.0, 1.0, 0.5;
  const std::vector<int> y{1, -1};
  const double gamma = 0.8;
  const double k12 = rbf(x.row(0), x.row(1), gamma);
  const double analytic = 1.0 / (1.0 - k12);  // unconstrained optimum

  SECTION("interior solution") {
    SvmParams p;
    p.c = 100.0;
    p.gamma = gamma;
    RbfSvm m;
    m.fit(x, y, p);
    REQUIRE(m.n_support_vectors() == 2);
    CHECK(std::abs(std::abs(m.coefficients()[0]) - analytic) <=
          1e-12 * analytic);
    CHECK(std::abs(std::abs(m.coefficients()[1]) - analytic) <=
          1e-12 * analytic);
    CHECK(std::abs(m.bias()) <= 1e-12);
    // both points sit exactly on their margins
    CHECK(m.decision_value(x.row(0)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(m.decision_value(x.row(1)) == Catch::Approx(-1.0).margin(1e-12));
  }

  SECTION("clipped at the box") {
    SvmParams p;
    p.c = 0.25 * analytic;  // force the bound
    p.gamma = gamma;
    RbfSvm m;
    m.fit(x, y, p);
    REQUIRE(m.n_support_vectors() == 2);
    CHECK(std::abs(m.coefficients()[0]) == p.c);
    CHECK(std::abs(m.coefficients()[1]) == p.c);
    CHECK(m.decision_value(x.row(0)) ==
          Catch::Approx(-m.decision_value(x.row(1))).margin(1e-12));
  }
}

TEST_CASE("smo reaches the exhaustive dual optimum on small problems") {
  GaussianRng rng(321);

  SECTION("four points") {
    Eigen::MatrixXd x(4, 2);
    x << 0.1, 0.2, 1.1, -0.4, -0.9, 0.8, 0.4, 1.3;
    const std::vector<int> y{1, -1, 1, -1};
    for (auto [c, gamma] : {std::pair{2.0, 0.7}, std::pair{0.5, 1.5}}) {
      SvmParams p;
      p.c = c;
      p.gamma = gamma;
      p.tol = 1e-6;
      p.check_monotonic = true;
      RbfSvm m;
      m.fit(x, y, p);
      const double oracle = exhaustive_dual_min(x, y, c, gamma, 81);
      const double got = dual_from_model(m);
      CHECK(got <= oracle + 1e-9);  // oracle is grid-limited, solver is not
      CHECK(std::abs(got - oracle) <= 1e-2);
      check_kkt(m, x, y, c, 1e-4);
    }
  }

  SECTION("six points") {
    Eigen::MatrixXd x(6, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const std::vector<int> y{1, 1, -1, 1, -1, -1};
    const double c = 1.0, gamma = 0.9;
    SvmParams p;
    p.c = c;
    p.gamma = gamma;
    p.tol = 1e-6;
    RbfSvm m;
    m.fit(x, y, p);
    const double oracle = exhaustive_dual_min(x, y, c, gamma, 33);
    const double got = dual_from_model(m);
    CHECK(got <= oracle + 1e-9);
    CHECK(std::abs(got - oracle) <= 1e-2);
    check_kkt(m, x, y, c, 1e-4);
  }
}

TEST_CASE("smo satisfies the kkt conditions on random problems") {
  std::vector<int> y;
  const Eigen::MatrixXd x = blob_data(12, 1.2, 99, y);
  for (auto [c, gamma] : {std::pair{2.0, 0.5}, std::pair{16.0, 2.0}}) {
    SvmParams p;
    p.c = c;
    p.gamma = gamma;
    p.tol = 1e-5;
    p.check_monotonic = true;
    p.cache_rows = 3;  // stress the lru path
    RbfSvm m;
    m.fit(x, y, p);
    check_kkt(m, x, y, c, 1e-3);
  }
}

TEST_CASE("svm separates well-separated blobs") {
  std::vector<int> y;
  const Eigen::MatrixXd x = blob_data(15, 3.0, 7, y);
  SvmParams p;
  p.c = 10.0;
  p.gamma = 0.5;
  RbfSvm m;
  m.fit(x, y, p);
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (m.predict(x.row(i)) == y[static_cast<std::size_t>(i)]) ++correct;
  CHECK(correct == x.rows());

  Eigen::RowVectorXd probe(2);
  probe << -3.0, -3.0;
  CHECK(m.predict(probe) == 1);
  probe << 3.0, 3.0;
  CHECK(m.predict(probe) == -1);
}

TEST_CASE("svm rejects bad inputs and states") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  RbfSvm m;
  SvmParams p;
  CHECK_THROWS_AS(m.decision_value(Eigen::RowVectorXd::Zero(1)), DataError);
  CHECK_THROWS_AS(m.fit(x, {1, 1, 1, 1}, p), DataError);       // one class
  CHECK_THROWS_AS(m.fit(x, {1, -1, 2, -1}, p), DataError);     // bad label
  CHECK_THROWS_AS(m.fit(x, {1, -1, 1}, p), DataError);         // count
  CHECK_THROWS_AS(m.fit(x.topRows(1), {1}, p), DataError);     // too few
  SvmParams bad = p;
  bad.c = 0.0;
  CHECK_THROWS_AS(m.fit(x, {1, -1, 1, -1}, bad), ConfigError);
  bad = p;
  bad.gamma = -1.0;
  CHECK_THROWS_AS(m.fit(x, {1, -1, 1, -1}, bad), ConfigError);
  bad = p;
  bad.max_iters = 0;
  CHECK_THROWS_AS(m.fit(x, {1, -1, 1, -1}, bad), ConfigError);
}

TEST_CASE("a decision value of exactly zero predicts the negative class") {
  nlohmann::json j;
  j["type"] = "rbf_svm";
  j["gamma"] = 1.0;
  j["bias"] = -1.0;
  j["coefficients"] = std::vector<double>{1.0};
  j["support_vectors"] = std::vector<std::vector<double>>{{0.0, 0.0}};
  const RbfSvm m = RbfSvm::from_json(j);
  const Eigen::RowVectorXd at_sv = Eigen::RowVectorXd::Zero(2);
  REQUIRE(m.decision_value(at_sv) == 0.0);  // 1*K(x,x) - 1
  CHECK(m.predict(at_sv) == -1);
}

TEST_CASE("svm json round-trip preserves the decision function") {
  std::vector<int> y;
  const Eigen::MatrixXd x = blob_data(8, 1.0, 3, y);
  SvmParams p;
  p.c = 4.0;
  p.gamma = 1.25;
  RbfSvm m;
  m.fit(x, y, p);

  const std::string text = m.to_json().dump();
  const RbfSvm back = RbfSvm::from_json(nlohmann::json::parse(text));
  GaussianRng rng(5);
  for (int i = 0; i < 50; ++i) {
    Eigen::RowVectorXd q(2);
    q << rng.normal(0, 2), rng.normal(0, 2);
    CHECK(back.decision_value(q) == m.decision_value(q));
  }

  nlohmann::json broken = m.to_json();
  broken["type"] = "linear";
  CHECK_THROWS_AS(RbfSvm::from_json(broken), DataError);
  broken = m.to_json();
  broken.erase("bias");
  CHECK_THROWS_AS(RbfSvm::from_json(broken), DataError);
  broken = m.to_json();
  broken["coefficients"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(RbfSvm::from_json(broken), DataError);
}

TEST_CASE("knn hand-checkable votes and tie-breaks") {
  Eigen::MatrixXd x(3, 1);
  x << 0.0, 2.0, 5.0;
  const std::vector<int> y{1, -1, -1};
  KnnModel m1;
  m1.fit(x, y, 1);

  Eigen::RowVectorXd q(1);
  q << 0.9;
  CHECK(m1.predict(q) == 1);
  q << 1.1;
  CHECK(m1.predict(q) == -1);
  // equidistant between indices 0 and 1: the lower index wins
  q << 1.0;
  CHECK(m1.predict(q) == 1);

  KnnModel m3;
  m3.fit(x, y, 3);
  q << 0.0;
  CHECK(m3.predict(q) == -1);  // votes +1, -1, -1

  KnnModel bad;
  CHECK_THROWS_AS(bad.fit(x, y, 2), ConfigError);   // even K ties
  CHECK_THROWS_AS(bad.fit(x, y, 0), ConfigError);
  CHECK_THROWS_AS(bad.fit(x, y, 5), DataError);     // K > n
  CHECK_THROWS_AS(bad.fit(x, {1, -1}, 1), DataError);
  CHECK_THROWS_AS(bad.fit(x, {1, -1, 3}, 1), DataError);
  CHECK_THROWS_AS(bad.predict(q), DataError);       // untrained
  Eigen::RowVectorXd wide(2);
  wide << 0, 0;
  CHECK_THROWS_AS(m1.predict(wide), DataError);
}

TEST_CASE("knn json round-trip preserves predictions") {
  std::vector<int> y;
  const Eigen::MatrixXd x = blob_data(6, 1.5, 11, y);
  KnnModel m;
  m.fit(x, y, 3);
  const std::string text = m.to_json().dump();
  const KnnModel back = KnnModel::from_json(nlohmann::json::parse(text));
  CHECK(back.k() == 3);
  CHECK(back.n_train() == x.rows());
  GaussianRng rng(2);
  for (int i = 0; i < 40; ++i) {
    Eigen::RowVectorXd q(2);
    q << rng.normal(0, 2), rng.normal(0, 2);
    CHECK(back.predict(q) == m.predict(q));
  }

  nlohmann::json broken = m.to_json();
  broken["k"] = 2;
  CHECK_THROWS_AS(KnnModel::from_json(broken), ConfigError);
  broken = m.to_json();
  broken["labels"] = std::vector<int>{1};
  CHECK_THROWS_AS(KnnModel::from_json(broken), DataError);
}

TEST_CASE("min-max scaling is invariant to per-feature affine rescaling") {
  GaussianRng rng(17);
  Eigen::MatrixXd x(30, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  const Eigen::Vector4d scale(2.0, 0.5, 10.0, 1.0);
  const Eigen::Vector4d shift(1.0, -3.0, 0.0, 100.0);
  Eigen::MatrixXd xs = x;
  for (Eigen::Index j = 0; j < 4; ++j)
    xs.col(j) = scale[j] * x.col(j).array() + shift[j];

  const ScalingTransform t = ScalingTransform::fit(x);
  const ScalingTransform ts = ScalingTransform::fit(xs);
  const Eigen::MatrixXd a = t.apply(x);
  const Eigen::MatrixXd b = ts.apply(xs);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.minCoeff() == 0.0);
  CHECK(a.maxCoeff() == 1.0);
}

TEST_CASE("scaler handles constant features and stays affine out of range") {
  Eigen::MatrixXd x(3, 2);
  x << 0.0, 7.0, 1.0, 7.0, 2.0, 7.0;
  const ScalingTransform t = ScalingTransform::fit(x);
  CHECK(t.ranges[1] == 0.0);
  const Eigen::MatrixXd mapped = t.apply(x);
  CHECK(mapped.col(1).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd probe(1, 2);
  probe << 4.0, 7.0;  // beyond the training max of feature 0
  CHECK(t.apply(probe)(0, 0) == 2.0);  // not clipped

  Eigen::MatrixXd narrow(1, 1);
  narrow << 1.0;
  CHECK_THROWS_AS(t.apply(narrow), DataError);
  CHECK_THROWS_AS(ScalingTransform::fit(Eigen::MatrixXd(0, 2)), DataError);
}

TEST_CASE("stratified folds deal classes round-robin") {
  const std::vector<int> y{1, 1, 1, 1, -1, -1, -1, -1};
  const std::vector<int> fold = stratified_folds(y, 2);
  CHECK(fold == std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1});

  const std::vector<int> order{7, 6, 5, 4, 3, 2, 1, 0};
  const std::vector<int> with_order = stratified_folds(y, 2, &order);
  CHECK(with_order == std::vector<int>{1, 0, 1, 0, 1, 0, 1, 0});

  // uneven class sizes: per-fold counts differ by at most one
  std::vector<int> y2;
  for (int i = 0; i < 13; ++i) y2.push_back(1);
  for (int i = 0; i < 9; ++i) y2.push_back(-1);
  const std::vector<int> f2 = stratified_folds(y2, 5);
  for (int cls : {1, -1}) {
    std::vector<int> count(5, 0);
    for (std::size_t i = 0; i < y2.size(); ++i)
      if (y2[i] == cls) count[static_cast<std::size_t>(f2[i])] += 1;
    const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
    CHECK(*hi - *lo <= 1);
  }

  CHECK_THROWS_AS(stratified_folds(y, 1), ConfigError);
  const std::vector<int> short_order{0, 1};
  CHECK_THROWS_AS(stratified_folds(y, 2, &short_order), DataError);
}

TEST_CASE("grid search breaks accuracy ties toward small C, large gamma") {
  std::vector<int> y;
  const Eigen::MatrixXd raw = blob_data(10, 4.0, 23, y);
  const Eigen::MatrixXd x = ScalingTransform::fit(raw).apply(raw);

  GridSearchSpec spec;
  spec.c_values = {1.0, 4.0, 16.0};
  spec.gamma_values = {0.25, 1.0, 4.0};
  spec.n_folds = 5;
  const GridSearchResult res = grid_search(x, y, spec);

  // blobs this far apart are perfectly separated everywhere on the grid
  CHECK(res.accuracy.minCoeff() == 1.0);
  CHECK(res.best_accuracy == 1.0);
  CHECK(res.best_c == 1.0);
  CHECK(res.best_gamma == 4.0);

  GridSearchSpec empty;
  empty.c_values.clear();
  CHECK_THROWS_AS(grid_search(x, y, empty), ConfigError);
  const std::vector<int> lone{1, -1, -1, -1};  // only one positive
  CHECK_THROWS_AS(grid_search(x.topRows(4), lone, spec), DataError);
}
