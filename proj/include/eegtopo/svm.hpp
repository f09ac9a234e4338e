#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

#include "eegtopo/types.hpp"

namespace eegtopo {

struct SvmParams {
  double c{1.0};
  double gamma{1.0};
  double tol{1e-3};          // KKT violation threshold
  long max_iters{1000000};
  bool check_monotonic{false};  // verify the dual objective never increases
  int cache_rows{1024};

  void validate() const {
    if (!(c > 0.0)) throw ConfigError("svm: C must be positive");
    if (!(gamma > 0.0)) throw ConfigError("svm: gamma must be positive");
    if (!(tol > 0.0)) throw ConfigError("svm: tol must be positive");
    if (max_iters < 1) throw ConfigError("svm: max_iters must be >= 1");
    if (cache_rows < 1) throw ConfigError("svm: cache_rows must be >= 1");
  }
};

namespace detail {

// Bounded LRU cache of kernel matrix rows.
class KernelCache {
 public:
  KernelCache(const Eigen::MatrixXd& x, double gamma, int capacity)
      : x_(x), gamma_(gamma), capacity_(std::max(capacity, 2)) {
    // capacity >= 2 so the two rows of a working pair coexist
    sq_norms_ = x.rowwise().squaredNorm();
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    auto it = map_.find(i);
    if (it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second.second);
      return it->second.first;
    }
    if (static_cast<int>(map_.size()) >= capacity_) {
      map_.erase(order_.back());
      order_.pop_back();
    }
    Eigen::VectorXd r =
        (-gamma_ *
         (sq_norms_.array() - 2.0 * (x_ * x_.row(i).transpose()).array() +
          sq_norms_[i]))
            .exp()
            .matrix();
    order_.push_front(i);
    auto [pos, inserted] =
        map_.emplace(i, std::make_pair(std::move(r), order_.begin()));
    (void)inserted;
    return pos->second.first;
  }

 private:
  const Eigen::MatrixXd& x_;
  double gamma_;
  int capacity_;
  Eigen::VectorXd sq_norms_;
  std::list<Eigen::Index> order_;
  std::unordered_map<Eigen::Index,
                     std::pair<Eigen::VectorXd, std::list<Eigen::Index>::iterator>>
      map_;
};

}  // namespace detail

// RBF-kernel soft-margin SVM trained by sequential minimal optimization with
// maximal-violating-pair working-set selection. Labels are +1 / -1; a
// decision value of exactly zero predicts -1.
class RbfSvm {
 public:
  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y,
           const SvmParams& params) {
    params.validate();
    const Eigen::Index n = x.rows();
    if (n < 2) throw DataError("svm: need at least 2 training samples");
    if (static_cast<Eigen::Index>(y.size()) != n)
      throw DataError("svm: label count does not match sample count");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
      if (v == 1) has_pos = true;
      else if (v == -1) has_neg = true;
      else throw DataError("svm: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg)
      throw DataError("svm: training set must contain both classes");

    gamma_ = params.gamma;
    detail::KernelCache cache(x, gamma_, params.cache_rows);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q*alpha - e
    const double c = params.c;

    auto dual_objective = [&]() {
      // 0.5*a'Qa - e'a == 0.5*sum(a_t*(grad_t - 1))
      double v = 0.0;
      for (Eigen::Index t = 0; t < n; ++t) v += alpha[t] * (grad[t] - 1.0);
      return 0.5 * v;
    };
    double last_obj = dual_objective();

    n_iters_ = 0;
    while (n_iters_ < params.max_iters) {
      // Maximal violating pair over I_up and I_low.
      Eigen::Index i = -1, j = -1;
      double m_up = -std::numeric_limits<double>::infinity();
      double m_low = std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 0; t < n; ++t) {
        const double v = -y[static_cast<std::size_t>(t)] * grad[t];
        const bool in_up = (y[static_cast<std::size_t>(t)] == 1 && alpha[t] < c) ||
                           (y[static_cast<std::size_t>(t)] == -1 && alpha[t] > 0.0);
        const bool in_low = (y[static_cast<std::size_t>(t)] == -1 && alpha[t] < c) ||
                            (y[static_cast<std::size_t>(t)] == 1 && alpha[t] > 0.0);
        if (in_up && v > m_up) {
          m_up = v;
          i = t;
        }
        if (in_low && v < m_low) {
          m_low = v;
          j = t;
        }
      }
      if (i < 0 || j < 0 || m_up - m_low <= params.tol) break;
      ++n_iters_;

      const Eigen::VectorXd& ki = cache.row(i);
      const Eigen::VectorXd& kj = cache.row(j);
      const int yi = y[static_cast<std::size_t>(i)];
      const int yj = y[static_cast<std::size_t>(j)];
      const double old_ai = alpha[i], old_aj = alpha[j];
      const double quad = std::max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12);

      if (yi != yj) {
        // Equal shift of both alphas preserves sum(alpha*y) when labels differ.
        const double delta = (-grad[i] - grad[j]) / quad;
        const double diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if (diff > 0.0 && alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        } else if (diff <= 0.0 && alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = -diff;
        }
        if (diff > 0.0 && alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        } else if (diff <= 0.0 && alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = c + diff;
        }
      } else {
        // Opposite shifts preserve sum(alpha*y) when labels match.
        const double delta = (grad[i] - grad[j]) / quad;
        const double sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if (sum > c) {
          if (alpha[i] > c) {
            alpha[i] = c;
            alpha[j] = sum - c;
          } else if (alpha[j] > c) {
            alpha[j] = c;
            alpha[i] = sum - c;
          }
        } else {
          if (alpha[j] < 0.0) {
            alpha[j] = 0.0;
            alpha[i] = sum;
          } else if (alpha[i] < 0.0) {
            alpha[i] = 0.0;
            alpha[j] = sum;
          }
        }
      }

      const double dai = alpha[i] - old_ai;
      const double daj = alpha[j] - old_aj;
      for (Eigen::Index t = 0; t < n; ++t)
        grad[t] += y[static_cast<std::size_t>(t)] *
                   (yi * ki[t] * dai + yj * kj[t] * daj);

      if (params.check_monotonic) {
        const double obj = dual_objective();
        if (obj > last_obj + 1e-9 * (1.0 + std::abs(last_obj)))
          throw NumericalError(
              "svm: dual objective increased from " + std::to_string(last_obj) +
              " to " + std::to_string(obj));
        last_obj = obj;
      }
    }
    if (n_iters_ >= params.max_iters)
      throw NumericalError("svm: SMO did not converge within " +
                           std::to_string(params.max_iters) + " iterations");

    // Bias from free support vectors; midpoint of the violation bounds when
    // none are free.
    double rho;
    double free_sum = 0.0;
    int free_count = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double yg = y[static_cast<std::size_t>(t)] * grad[t];
      if (alpha[t] > 0.0 && alpha[t] < c) {
        free_sum += yg;
        ++free_count;
      } else if ((alpha[t] == 0.0 && y[static_cast<std::size_t>(t)] == 1) ||
                 (alpha[t] == c && y[static_cast<std::size_t>(t)] == -1)) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    }
    rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2.0;
    b_ = -rho;

    support_vectors_.resize(0, x.cols());
    coeffs_.resize(0);
    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
      if (alpha[t] > 0.0) sv.push_back(t);
    support_vectors_.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    coeffs_.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
      support_vectors_.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
      coeffs_[static_cast<Eigen::Index>(s)] =
          alpha[sv[s]] * y[static_cast<std::size_t>(sv[s])];
    }
    trained_ = true;
  }

  double decision_value(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (!trained_) throw DataError("svm: model is not trained");
    const Eigen::VectorXd d2 =
        (support_vectors_.rowwise() - x).rowwise().squaredNorm();
    return coeffs_.dot((-gamma_ * d2.array()).exp().matrix()) + b_;
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return decision_value(x) > 0.0 ? 1 : -1;
  }

  bool trained() const { return trained_; }
  long n_iters() const { return n_iters_; }
  double bias() const { return b_; }
  double gamma() const { return gamma_; }
  Eigen::Index n_support_vectors() const { return support_vectors_.rows(); }
  const Eigen::MatrixXd& support_vectors() const { return support_vectors_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }

  nlohmann::ordered_json to_json() const {
    if (!trained_) throw DataError("svm: model is not trained");
    nlohmann::ordered_json j;
    j["type"] = "rbf_svm";
    j["gamma"] = gamma_;
    j["bias"] = b_;
    j["coefficients"] = std::vector<double>(
        coeffs_.data(), coeffs_.data() + coeffs_.size());
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < support_vectors_.rows(); ++r) {
      std::vector<double> row(support_vectors_.cols());
      for (Eigen::Index c2 = 0; c2 < support_vectors_.cols(); ++c2)
        row[static_cast<std::size_t>(c2)] = support_vectors_(r, c2);
      rows.push_back(row);
    }
    j["support_vectors"] = rows;
    return j;
  }

  static RbfSvm from_json(const nlohmann::json& j) {
    try {
      if (j.at("type").get<std::string>() != "rbf_svm")
        throw DataError("svm: wrong model type '" +
                        j.at("type").get<std::string>() + "'");
      RbfSvm m;
      m.gamma_ = j.at("gamma").get<double>();
      m.b_ = j.at("bias").get<double>();
      const auto coeffs = j.at("coefficients").get<std::vector<double>>();
      const auto& rows = j.at("support_vectors");
      if (rows.size() != coeffs.size())
        throw DataError("svm: coefficient/support-vector count mismatch");
      if (rows.empty()) throw DataError("svm: model has no support vectors");
      const std::size_t dim = rows.front().size();
      m.coeffs_.resize(static_cast<Eigen::Index>(coeffs.size()));
      m.support_vectors_.resize(static_cast<Eigen::Index>(rows.size()),
                                static_cast<Eigen::Index>(dim));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (row.size() != dim)
          throw DataError("svm: ragged support-vector rows");
        m.coeffs_[static_cast<Eigen::Index>(r)] = coeffs[r];
        for (std::size_t c2 = 0; c2 < dim; ++c2)
          m.support_vectors_(static_cast<Eigen::Index>(r),
                             static_cast<Eigen::Index>(c2)) = row[c2];
      }
      m.trained_ = true;
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("svm: malformed model json: ") + e.what());
    }
  }

 private:
  Eigen::MatrixXd support_vectors_;
  Eigen::VectorXd coeffs_;  // alpha_i * y_i
  double b_{0.0};
  double gamma_{1.0};
  long n_iters_{0};
  bool trained_{false};
};

}  // namespace eegtopo
