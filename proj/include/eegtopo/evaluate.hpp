#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "eegtopo/classify.hpp"
#include "eegtopo/eigenfeat.hpp"
#include "eegtopo/stats.hpp"
#include "eegtopo/types.hpp"
#include "eegtopo/util.hpp"

namespace eegtopo {

inline int answer_label(Answer a) { return a == Answer::Correct ? 1 : -1; }

// The study design keeps the questions answered most fluently and least
// fluently: the fastest correct answers and the slowest incorrect ones.
struct SelectionPolicy {
  int n_per_class{100};

  void validate() const {
    if (n_per_class < 1)
      throw ConfigError("selection: n_per_class must be >= 1");
  }
};

// Indices of the selected records, sorted by (subject, question) so the
// downstream ordering is independent of timing ties. Ties in elapsed time are
// broken by (subject, question) as well.
inline std::vector<std::size_t> select_questions(
    const std::vector<QuestionFeatures>& all, const SelectionPolicy& policy) {
  policy.validate();
  std::vector<std::size_t> correct, incorrect;
  for (std::size_t i = 0; i < all.size(); ++i)
    (all[i].answer == Answer::Correct ? correct : incorrect).push_back(i);
  const auto n = static_cast<std::size_t>(policy.n_per_class);
  if (correct.size() < n || incorrect.size() < n)
    throw DataError("selection: need " + std::to_string(n) +
                    " per class, have " + std::to_string(correct.size()) +
                    " correct / " + std::to_string(incorrect.size()) +
                    " incorrect");
  auto key = [&](std::size_t i) {
    return std::tie(all[i].subject_id, all[i].question_id);
  };
  std::sort(correct.begin(), correct.end(), [&](std::size_t a, std::size_t b) {
    if (all[a].elapsed_s != all[b].elapsed_s)
      return all[a].elapsed_s < all[b].elapsed_s;  // fastest first
    return key(a) < key(b);
  });
  std::sort(incorrect.begin(), incorrect.end(),
            [&](std::size_t a, std::size_t b) {
              if (all[a].elapsed_s != all[b].elapsed_s)
                return all[a].elapsed_s > all[b].elapsed_s;  // slowest first
              return key(a) < key(b);
            });
  std::vector<std::size_t> keep(correct.begin(), correct.begin() + n);
  keep.insert(keep.end(), incorrect.begin(), incorrect.begin() + n);
  std::sort(keep.begin(), keep.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return keep;
}

// Feature matrices ready for classification, one row per question.
struct QuestionDataset {
  Eigen::MatrixXd red, green, blue;  // n x k each
  Eigen::MatrixXd concat;            // n x 3k
  std::vector<int> labels;           // +1 correct, -1 incorrect
  std::vector<std::string> ids;      // "subject/question"
  std::vector<double> elapsed_s;
};

inline QuestionDataset make_dataset(const std::vector<QuestionFeatures>& feats,
                                    const std::vector<std::size_t>& keep) {
  if (keep.empty()) throw DataError("dataset: no records selected");
  const Eigen::Index k = feats[keep.front()].red.size();
  QuestionDataset ds;
  const auto n = static_cast<Eigen::Index>(keep.size());
  ds.red.resize(n, k);
  ds.green.resize(n, k);
  ds.blue.resize(n, k);
  ds.concat.resize(n, 3 * k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const QuestionFeatures& f = feats[keep[static_cast<std::size_t>(r)]];
    if (f.red.size() != k || f.green.size() != k || f.blue.size() != k)
      throw DataError("dataset: inconsistent feature lengths");
    ds.red.row(r) = f.red.transpose();
    ds.green.row(r) = f.green.transpose();
    ds.blue.row(r) = f.blue.transpose();
    ds.concat.row(r) << f.red.transpose(), f.green.transpose(),
        f.blue.transpose();
    ds.labels.push_back(answer_label(f.answer));
    ds.ids.push_back(f.subject_id + "/" + f.question_id);
    ds.elapsed_s.push_back(f.elapsed_s);
  }
  return ds;
}

inline QuestionDataset make_dataset(const std::vector<QuestionFeatures>& feats) {
  std::vector<std::size_t> keep(feats.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  return make_dataset(feats, keep);
}

struct EvalSpec {
  int n_folds{10};
  // 50:50 holdout instead of full CV: two stratified halves, train on the
  // second, score the first. An optional mode; CV is canonical.
  bool holdout{false};
  std::vector<int> knn_k{1, 3, 5, 7};
  bool run_svm{true};
  GridSearchSpec grid;
  SvmParams svm_base;
  std::uint64_t seed{1};
  int jobs{1};

  void validate() const {
    if (n_folds < 2) throw ConfigError("eval: need at least 2 folds");
    if (holdout && n_folds != 2)
      throw ConfigError("eval: holdout mode uses exactly 2 folds");
    for (int k : knn_k)
      if (k < 1 || k % 2 == 0)
        throw ConfigError("eval: KNN K values must be positive and odd");
    if (!run_svm && knn_k.empty())
      throw ConfigError("eval: no classifiers enabled");
    grid.validate();
    if (jobs < 1) throw ConfigError("eval: jobs must be >= 1");
  }
};

inline const std::array<const char*, 4> kChannelNames = {"red", "green", "blue",
                                                         "rgb_concat"};

struct ScoreEntry {
  std::string model;    // "knn_k3", "svm"
  std::string channel;  // "red", "green", "blue", "rgb_concat", "majority"
  double accuracy{0.0};
  std::vector<double> fold_accuracies;
};

struct SvmChoice {
  int fold{0};
  std::string channel;
  double c{0.0}, gamma{0.0}, inner_accuracy{0.0};
};

struct EvaluationResult {
  int n_folds{0};
  std::vector<int> fold_of;  // fold id per dataset row
  std::vector<ScoreEntry> scores;
  std::vector<SvmChoice> svm_choices;
};

namespace detail {

// Seeded Fisher-Yates; the library RNG keeps this reproducible everywhere.
inline std::vector<int> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  GaussianRng rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<std::size_t>(rng.uniform_index(i))]);
  return order;
}

struct FoldOutcome {
  // predictions[model][channel] over the fold's test rows
  std::vector<std::array<std::vector<int>, 4>> preds;
  std::vector<Eigen::Index> test_rows;
  std::vector<SvmChoice> choices;
};

}  // namespace detail

// Stratified k-fold cross-validation of every configured classifier on every
// color channel plus the concatenated features. The scaler and the SVM grid
// search only ever see the training side of each fold.
inline EvaluationResult run_cv(const QuestionDataset& ds, const EvalSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(ds.red.rows());
  if (n < static_cast<std::size_t>(2 * spec.n_folds))
    throw DataError("eval: too few samples for " +
                    std::to_string(spec.n_folds) + " folds");
  const std::vector<int> order = detail::shuffled_order(n, spec.seed);
  const std::vector<int> fold = stratified_folds(ds.labels, spec.n_folds, &order);
  // Holdout scores one stratified half; CV rotates through every fold.
  const int n_tested = spec.holdout ? 1 : spec.n_folds;

  std::vector<std::string> models;
  for (int k : spec.knn_k) models.push_back("knn_k" + std::to_string(k));
  if (spec.run_svm) models.push_back("svm");

  const std::array<const Eigen::MatrixXd*, 4> channels = {
      &ds.red, &ds.green, &ds.blue, &ds.concat};

  std::vector<detail::FoldOutcome> outcomes(static_cast<std::size_t>(n_tested));
  parallel_for(static_cast<std::size_t>(n_tested), spec.jobs,
               [&](std::size_t f) {
    detail::FoldOutcome& out = outcomes[f];
    std::vector<Eigen::Index> train_rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold[i] == static_cast<int>(f))
        out.test_rows.push_back(static_cast<Eigen::Index>(i));
      else
        train_rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (out.test_rows.empty() || train_rows.empty())
      throw DataError("eval: fold " + std::to_string(f) + " is degenerate");
    std::vector<int> y_train;
    y_train.reserve(train_rows.size());
    for (Eigen::Index i : train_rows)
      y_train.push_back(ds.labels[static_cast<std::size_t>(i)]);

    out.preds.resize(models.size());
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
      const Eigen::MatrixXd& x = *channels[ch];
      Eigen::MatrixXd x_train(static_cast<Eigen::Index>(train_rows.size()),
                              x.cols());
      for (std::size_t i = 0; i < train_rows.size(); ++i)
        x_train.row(static_cast<Eigen::Index>(i)) = x.row(train_rows[i]);
      Eigen::MatrixXd x_test(static_cast<Eigen::Index>(out.test_rows.size()),
                             x.cols());
      for (std::size_t i = 0; i < out.test_rows.size(); ++i)
        x_test.row(static_cast<Eigen::Index>(i)) = x.row(out.test_rows[i]);

      const ScalingTransform scaler = ScalingTransform::fit(x_train);
      const Eigen::MatrixXd s_train = scaler.apply(x_train);
      const Eigen::MatrixXd s_test = scaler.apply(x_test);

      std::size_t mi = 0;
      for (int k : spec.knn_k) {
        KnnModel knn;
        knn.fit(s_train, y_train, k);
        auto& p = out.preds[mi][ch];
        p.resize(out.test_rows.size());
        for (std::size_t i = 0; i < out.test_rows.size(); ++i)
          p[i] = knn.predict(s_test.row(static_cast<Eigen::Index>(i)));
        ++mi;
      }
      if (spec.run_svm) {
        const GridSearchResult gs =
            grid_search(s_train, y_train, spec.grid, spec.svm_base);
        SvmParams p = spec.svm_base;
        p.c = gs.best_c;
        p.gamma = gs.best_gamma;
        RbfSvm svm;
        svm.fit(s_train, y_train, p);
        auto& preds = out.preds[mi][ch];
        preds.resize(out.test_rows.size());
        for (std::size_t i = 0; i < out.test_rows.size(); ++i)
          preds[i] = svm.predict(s_test.row(static_cast<Eigen::Index>(i)));
        out.choices.push_back({static_cast<int>(f), kChannelNames[ch],
                               gs.best_c, gs.best_gamma, gs.best_accuracy});
      }
    }
  });

  // Stitch fold outcomes into per-sample predictions, then score.
  EvaluationResult res;
  res.n_folds = spec.n_folds;
  res.fold_of = fold;
  for (const auto& out : outcomes)
    for (const auto& c : out.choices) res.svm_choices.push_back(c);

  for (std::size_t m = 0; m < models.size(); ++m) {
    std::array<std::vector<int>, 5> pred_by_mode;  // +majority
    for (auto& p : pred_by_mode) p.assign(n, 0);
    for (const auto& out : outcomes) {
      for (std::size_t ch = 0; ch < 4; ++ch)
        for (std::size_t i = 0; i < out.test_rows.size(); ++i)
          pred_by_mode[ch][static_cast<std::size_t>(out.test_rows[i])] =
              out.preds[m][ch][i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int vote =
          pred_by_mode[0][i] + pred_by_mode[1][i] + pred_by_mode[2][i];
      pred_by_mode[4][i] = vote > 0 ? 1 : -1;
    }
    const std::array<std::string, 5> mode_names = {"red", "green", "blue",
                                                   "rgb_concat", "majority"};
    for (std::size_t mode = 0; mode < 5; ++mode) {
      ScoreEntry entry;
      entry.model = models[m];
      entry.channel = mode_names[mode];
      long correct = 0, total = 0;
      std::vector<long> fold_total(static_cast<std::size_t>(n_tested), 0);
      std::vector<long> fold_correct(static_cast<std::size_t>(n_tested), 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] >= n_tested) continue;  // untested half in holdout mode
        const auto fi = static_cast<std::size_t>(fold[i]);
        fold_total[fi] += 1;
        total += 1;
        if (pred_by_mode[mode][i] == ds.labels[i]) {
          correct += 1;
          fold_correct[fi] += 1;
        }
      }
      entry.fold_accuracies.assign(static_cast<std::size_t>(n_tested), 0.0);
      for (std::size_t f = 0; f < fold_total.size(); ++f)
        entry.fold_accuracies[f] =
            fold_total[f] > 0 ? static_cast<double>(fold_correct[f]) /
                                    static_cast<double>(fold_total[f])
                              : 0.0;
      entry.accuracy =
          total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                    : 0.0;
      res.scores.push_back(std::move(entry));
    }
  }
  return res;
}

struct RepeatedScore {
  std::string model;
  std::string channel;
  std::vector<double> accuracies;  // n_runs x n_folds fold accuracies
  double mean_accuracy{0.0};
  double std_accuracy{0.0};
};

struct RepeatedResult {
  int n_runs{0};
  int n_folds{0};
  std::vector<RepeatedScore> scores;
  EvaluationResult first_run;  // fold plan + grid choices of the first seed
};

// Repeats the whole cross-validation with shuffle seeds base, base+1, ... and
// pools the per-fold accuracies; these pooled samples feed the condition
// comparison t-test.
inline RepeatedResult repeated_runs(const QuestionDataset& ds,
                                    const EvalSpec& spec, int n_runs) {
  if (n_runs < 1) throw ConfigError("eval: n_runs must be >= 1");
  RepeatedResult res;
  res.n_runs = n_runs;
  res.n_folds = spec.n_folds;
  for (int run = 0; run < n_runs; ++run) {
    EvalSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(run);
    const EvaluationResult r = run_cv(ds, s);
    if (run == 0) {
      for (const auto& sc : r.scores)
        res.scores.push_back({sc.model, sc.channel, {}, 0.0, 0.0});
      res.first_run = r;
    }
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
      auto& dst = res.scores[i];
      if (dst.model != r.scores[i].model || dst.channel != r.scores[i].channel)
        throw DataError("eval: score table changed between runs");
      dst.accuracies.insert(dst.accuracies.end(),
                            r.scores[i].fold_accuracies.begin(),
                            r.scores[i].fold_accuracies.end());
    }
  }
  for (auto& sc : res.scores) {
    sc.mean_accuracy = mean(sc.accuracies);
    sc.std_accuracy = sc.accuracies.size() > 1 ? sample_std(sc.accuracies) : 0.0;
  }
  return res;
}

}  // namespace eegtopo
