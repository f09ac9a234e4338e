#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "eegtopo/svm.hpp"
#include "eegtopo/types.hpp"

namespace eegtopo {

// Per-feature min-max map to [0, 1], fit on training data only. Constant
// features map to 0; test-time values outside the training range are NOT
// clipped, so the transform stays affine.
struct ScalingTransform {
  Eigen::VectorXd mins;
  Eigen::VectorXd ranges;  // 0 marks a constant feature

  static ScalingTransform fit(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    if (x.rows() == 0) throw DataError("scaler: no training samples");
    ScalingTransform t;
    t.mins = x.colwise().minCoeff().transpose();
    t.ranges = x.colwise().maxCoeff().transpose() - t.mins;
    return t;
  }

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    if (x.cols() != mins.size())
      throw DataError("scaler: feature count mismatch");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (ranges[j] > 0.0)
        out.col(j) = (x.col(j).array() - mins[j]) / ranges[j];
      else
        out.col(j).setZero();
    }
    return out;
  }
};

// k-nearest-neighbour classifier, squared-Euclidean metric. K must be odd so
// a two-class vote cannot tie; equal distances are broken by the lower
// training index.
class KnnModel {
 public:
  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int k) {
    if (x.rows() < 1) throw DataError("knn: no training samples");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
      throw DataError("knn: label count does not match sample count");
    for (int v : y)
      if (v != 1 && v != -1) throw DataError("knn: labels must be +1 or -1");
    if (k < 1 || k % 2 == 0)
      throw ConfigError("knn: K must be a positive odd number");
    if (k > x.rows())
      throw DataError("knn: K=" + std::to_string(k) + " exceeds " +
                      std::to_string(x.rows()) + " training samples");
    x_ = x;
    y_ = y;
    k_ = k;
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (x_.rows() == 0) throw DataError("knn: model is not trained");
    if (x.size() != x_.cols()) throw DataError("knn: feature count mismatch");
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index i = 0; i < x_.rows(); ++i)
      dist.emplace_back((x_.row(i) - x).squaredNorm(), i);
    std::sort(dist.begin(), dist.end());
    int vote = 0;
    for (int i = 0; i < k_; ++i)
      vote += y_[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)];
    return vote > 0 ? 1 : -1;
  }

  int k() const { return k_; }
  Eigen::Index n_train() const { return x_.rows(); }

  nlohmann::ordered_json to_json() const {
    if (x_.rows() == 0) throw DataError("knn: model is not trained");
    nlohmann::ordered_json j;
    j["type"] = "knn";
    j["k"] = k_;
    j["labels"] = y_;
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < x_.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(x_.cols()));
      for (Eigen::Index c = 0; c < x_.cols(); ++c)
        row[static_cast<std::size_t>(c)] = x_(r, c);
      rows.push_back(row);
    }
    j["train"] = rows;
    return j;
  }

  static KnnModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("type").get<std::string>() != "knn")
        throw DataError("knn: wrong model type");
      const auto labels = j.at("labels").get<std::vector<int>>();
      const auto& rows = j.at("train");
      if (rows.size() != labels.size() || rows.empty())
        throw DataError("knn: malformed model");
      const std::size_t dim = rows.front().size();
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(dim));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (row.size() != dim) throw DataError("knn: ragged training rows");
        for (std::size_t c = 0; c < dim; ++c)
          x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
      }
      KnnModel m;
      m.fit(x, labels, j.at("k").get<int>());
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("knn: malformed model json: ") + e.what());
    }
  }

 private:
  Eigen::MatrixXd x_;
  std::vector<int> y_;
  int k_{1};
};

// Fold id per sample: each class is dealt round-robin across folds in the
// order given (identity order by default), so per-fold class counts differ
// by at most one.
inline std::vector<int> stratified_folds(const std::vector<int>& y, int n_folds,
                                         const std::vector<int>* order = nullptr) {
  if (n_folds < 2) throw ConfigError("folds: need at least 2 folds");
  const auto n = static_cast<int>(y.size());
  std::vector<int> idx;
  if (order) {
    idx = *order;
    if (static_cast<int>(idx.size()) != n)
      throw DataError("folds: order length does not match labels");
  } else {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
  }
  std::vector<int> fold(static_cast<std::size_t>(n), -1);
  for (int cls : {1, -1}) {
    int next = 0;
    for (int i : idx) {
      if (y[static_cast<std::size_t>(i)] != cls) continue;
      fold[static_cast<std::size_t>(i)] = next;
      next = (next + 1) % n_folds;
    }
  }
  return fold;
}

inline std::vector<double> default_c_grid() {
  std::vector<double> v;
  for (int e = -5; e <= 15; e += 2) v.push_back(std::ldexp(1.0, e));
  return v;
}

inline std::vector<double> default_gamma_grid() {
  std::vector<double> v;
  for (int e = -15; e <= 3; e += 2) v.push_back(std::ldexp(1.0, e));
  return v;
}

struct GridSearchSpec {
  std::vector<double> c_values{default_c_grid()};
  std::vector<double> gamma_values{default_gamma_grid()};
  int n_folds{5};

  void validate() const {
    if (c_values.empty() || gamma_values.empty())
      throw ConfigError("grid: empty parameter grid");
    if (n_folds < 2) throw ConfigError("grid: need at least 2 folds");
    for (double c : c_values)
      if (!(c > 0.0)) throw ConfigError("grid: C values must be positive");
    for (double g : gamma_values)
      if (!(g > 0.0)) throw ConfigError("grid: gamma values must be positive");
  }
};

struct GridSearchResult {
  double best_c{0.0};
  double best_gamma{0.0};
  double best_accuracy{-1.0};
  Eigen::MatrixXd accuracy;  // c index x gamma index
};

// Exhaustive (C, gamma) search scored by stratified cross-validation on the
// given (already scaled) training data. Ties prefer the smallest C, then the
// largest gamma.
inline GridSearchResult grid_search(const Eigen::MatrixXd& x,
                                    const std::vector<int>& y,
                                    const GridSearchSpec& spec,
                                    const SvmParams& base = {}) {
  spec.validate();
  int n_pos = 0, n_neg = 0;
  for (int v : y) (v == 1 ? n_pos : n_neg) += 1;
  if (n_pos < 2 || n_neg < 2)
    throw DataError("grid: need at least 2 samples of each class");
  const std::vector<int> fold = stratified_folds(y, spec.n_folds);

  GridSearchResult res;
  res.accuracy.resize(static_cast<Eigen::Index>(spec.c_values.size()),
                      static_cast<Eigen::Index>(spec.gamma_values.size()));
  for (std::size_t ci = 0; ci < spec.c_values.size(); ++ci) {
    for (std::size_t gi = 0; gi < spec.gamma_values.size(); ++gi) {
      long correct = 0, total = 0;
      for (int f = 0; f < spec.n_folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (std::size_t i = 0; i < y.size(); ++i)
          (fold[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
        if (va.empty() || tr.empty()) continue;
        Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), x.cols());
        std::vector<int> ytr;
        ytr.reserve(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) {
          xtr.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
          ytr.push_back(y[static_cast<std::size_t>(tr[i])]);
        }
        SvmParams p = base;
        p.c = spec.c_values[ci];
        p.gamma = spec.gamma_values[gi];
        RbfSvm svm;
        svm.fit(xtr, ytr, p);
        for (Eigen::Index i : va) {
          total += 1;
          if (svm.predict(x.row(i)) == y[static_cast<std::size_t>(i)])
            correct += 1;
        }
      }
      const double acc =
          total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                    : 0.0;
      res.accuracy(static_cast<Eigen::Index>(ci),
                   static_cast<Eigen::Index>(gi)) = acc;
      const bool better =
          acc > res.best_accuracy ||
          (acc == res.best_accuracy &&
           (spec.c_values[ci] < res.best_c ||
            (spec.c_values[ci] == res.best_c &&
             spec.gamma_values[gi] > res.best_gamma)));
      if (better) {
        res.best_accuracy = acc;
        res.best_c = spec.c_values[ci];
        res.best_gamma = spec.gamma_values[gi];
      }
    }
  }
  return res;
}

}  // namespace eegtopo
