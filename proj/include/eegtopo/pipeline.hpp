#pragma once

// Orchestration behind the CLI subcommands: synthesize a dataset onto disk,
// keep the spectra/feature caches fresh, run evaluations, compare two
// conditions, and summarize answer times. Every artifact written here is
// byte-deterministic for a fixed config and seed, independent of --jobs.

#include <eegtopo/cache.hpp>
#include <eegtopo/config.hpp>
#include <eegtopo/eigenfeat.hpp>
#include <eegtopo/evaluate.hpp>
#include <eegtopo/filter.hpp>
#include <eegtopo/io.hpp>
#include <eegtopo/montage.hpp>
#include <eegtopo/ocular.hpp>
#include <eegtopo/stats.hpp>
#include <eegtopo/svg.hpp>
#include <eegtopo/synth.hpp>
#include <eegtopo/topomap.hpp>
#include <eegtopo/util.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace eegtopo {

inline constexpr int kSynthChannels = 128;

struct SubjectEntry {
  std::string id;
  std::string recording;  // file names relative to the dataset directory
  std::string events;
};

struct DatasetManifest {
  double sample_rate_hz{250.0};
  std::string montage{"montage.csv"};
  std::vector<SubjectEntry> subjects;

  static DatasetManifest load(const std::string& data_dir) {
    const std::string path = data_dir + "/manifest.json";
    std::ifstream f(path);
    if (!f)
      throw DataError("dataset: cannot open " + path +
                      "; run the synth step for this config first");
    nlohmann::json j;
    try {
      f >> j;
      DatasetManifest m;
      m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
      m.montage = j.at("montage").get<std::string>();
      for (const auto& s : j.at("subjects"))
        m.subjects.push_back({s.at("id").get<std::string>(),
                              s.at("recording").get<std::string>(),
                              s.at("events").get<std::string>()});
      if (!(m.sample_rate_hz > 0.0))
        throw DataError("dataset: non-positive sample rate in " + path);
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("dataset: malformed manifest " + path + ": " + e.what());
    }
  }

  void save(const std::string& data_dir) const {
    nlohmann::ordered_json j;
    j["sample_rate_hz"] = sample_rate_hz;
    j["montage"] = montage;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : subjects)
      arr.push_back(nlohmann::ordered_json{
          {"id", s.id}, {"recording", s.recording}, {"events", s.events}});
    j["subjects"] = std::move(arr);
    const std::string path = data_dir + "/manifest.json";
    std::ofstream f(path);
    f << j.dump(2) << "\n";
    if (!f) throw DataError("dataset: failed writing " + path);
  }
};

// ---------------------------------------------------------------------------
// synth

inline DatasetManifest cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.data_dir);

  const Montage montage = geodesic_montage(kSynthChannels);
  save_montage_csv(montage, cfg.data_dir + "/montage.csv");

  DatasetManifest manifest;
  manifest.sample_rate_hz = cfg.synth.sample_rate_hz;
  manifest.subjects.resize(static_cast<std::size_t>(cfg.synth.n_subjects));

  parallel_for(static_cast<std::size_t>(cfg.synth.n_subjects), cfg.eval.jobs,
               [&](std::size_t s) {
                 auto [rec, events] = synthesize_subject(
                     cfg.synth, montage, static_cast<int>(s));
                 SubjectEntry e;
                 e.id = rec.subject_id;
                 e.recording = rec.subject_id + ".eegr";
                 e.events = rec.subject_id + ".events.json";
                 write_recording(rec, cfg.data_dir + "/" + e.recording);
                 write_events(events, cfg.synth.sample_rate_hz,
                              cfg.data_dir + "/" + e.events);
                 manifest.subjects[s] = std::move(e);
               });

  manifest.save(cfg.data_dir);
  log << "synth: wrote " << manifest.subjects.size() << " subjects x "
      << cfg.synth.n_questions << " questions to " << cfg.data_dir << "\n";
  return manifest;
}

// ---------------------------------------------------------------------------
// spectra cache

namespace detail {

// Full preprocessing for one subject, then one eigenvalue prefix per kept
// question. `wanted` limits work to questions missing from the cache.
inline std::vector<SpectraRecord> subject_spectra(
    const PipelineConfig& cfg, const Montage& montage, double sample_rate_hz,
    const std::string& data_dir, const SubjectEntry& entry,
    const std::set<std::string>& wanted) {
  const Recording raw =
      load_recording(data_dir + "/" + entry.recording, montage);
  const EventLog events = load_events(data_dir + "/" + entry.events,
                                      sample_rate_hz, raw.n_samples());

  Recording clean = bandpass(raw, cfg.bandpass);
  const OcularModel model = fit_ocular(clean, cfg.ocular);
  clean = remove_ocular(clean, model);

  // EOG channels carry residual blink signal by construction; keep them off
  // the scalp interpolation.
  const TopomapRenderer renderer(montage, clean.eog_channels,
                                 cfg.topomap.grid_size);

  std::vector<SpectraRecord> out;
  for (const auto& ev : events.entries) {
    if (ev.excluded || !wanted.count(ev.question_id)) continue;
    const RgbStack stack = render_stack(
        renderer, clean.data.middleCols(ev.start_sample,
                                        ev.end_sample - ev.start_sample),
        cfg.topomap.stride);
    const long n = static_cast<long>(stack.n_frames());
    if (n < 2)
      throw DataError("features: question '" + ev.question_id + "' of " +
                      entry.id + " yields " + std::to_string(n) +
                      " frames at stride " + std::to_string(cfg.topomap.stride) +
                      "; need at least 2 for a centered spectrum");
    const int depth = static_cast<int>(std::min<long>(kMaxFeatureK, n - 1));

    SpectraRecord rec;
    rec.subject_id = entry.id;
    rec.question_id = ev.question_id;
    rec.answer = ev.answer;
    rec.elapsed_s = ev.elapsed_seconds(sample_rate_hz);
    rec.n_frames = n;
    const Eigen::MatrixXd* channels[3] = {&stack.red, &stack.green,
                                          &stack.blue};
    for (int c = 0; c < 3; ++c) {
      const Eigen::VectorXd ev_c = sweep_eigenvalues(*channels[c], depth);
      rec.spectra[static_cast<std::size_t>(c)]
          .assign(ev_c.data(), ev_c.data() + ev_c.size());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace detail

// Loads the spectra cache keyed by the stack hash, computes whatever the
// current dataset needs that is missing (or was dropped by the tolerant
// reader), and rewrites the cache when anything changed.
inline SpectraMap ensure_spectra(const PipelineConfig& cfg,
                                 const DatasetManifest& manifest,
                                 const Montage& montage, std::ostream& log) {
  const std::string hash = cfg.stack_hash();
  const std::string path = spectra_cache_path(cfg.cache_dir, hash);

  std::vector<std::string> warnings;
  SpectraMap map = load_spectra_cache(path, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";

  // Per subject, the questions the cache is missing.
  std::vector<std::set<std::string>> missing(manifest.subjects.size());
  std::size_t n_missing = 0;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    const auto& entry = manifest.subjects[s];
    const EventLog events =
        load_events(cfg.data_dir + "/" + entry.events, manifest.sample_rate_hz);
    for (const auto& ev : events.entries) {
      if (ev.excluded) continue;
      if (!map.count({entry.id, ev.question_id})) {
        missing[s].insert(ev.question_id);
        ++n_missing;
      }
    }
  }

  if (n_missing == 0 && warnings.empty()) {
    log << "features: spectra cache hit (" << map.size() << " questions, hash "
        << hash << ")\n";
    return map;
  }

  std::vector<std::vector<SpectraRecord>> fresh(manifest.subjects.size());
  parallel_for(manifest.subjects.size(), cfg.eval.jobs, [&](std::size_t s) {
    if (missing[s].empty()) return;
    fresh[s] = detail::subject_spectra(cfg, montage, manifest.sample_rate_hz,
                                       cfg.data_dir, manifest.subjects[s],
                                       missing[s]);
  });
  for (auto& batch : fresh)
    for (auto& rec : batch) {
      SpectraKey key{rec.subject_id, rec.question_id};
      map[key] = std::move(rec);
    }

  save_spectra_cache(path, map, hash);
  log << "features: computed spectra for " << n_missing << " questions (hash "
      << hash << ")\n";
  return map;
}

// ---------------------------------------------------------------------------
// features

// Feature rows in manifest order: subjects as listed, questions in event
// order. The spectra map may hold extra (stale) entries; only current ones
// make it into the table.
inline std::vector<QuestionFeatures> collect_features(
    const PipelineConfig& cfg, const DatasetManifest& manifest,
    const SpectraMap& spectra) {
  std::vector<QuestionFeatures> feats;
  for (const auto& entry : manifest.subjects) {
    const EventLog events =
        load_events(cfg.data_dir + "/" + entry.events, manifest.sample_rate_hz);
    for (const auto& ev : events.entries) {
      if (ev.excluded) continue;
      const auto it = spectra.find({entry.id, ev.question_id});
      if (it == spectra.end())
        throw DataError("features: spectra cache lost " + entry.id + "/" +
                        ev.question_id);
      feats.push_back(features_from_spectra(it->second, cfg.feature_k));
    }
  }
  return feats;
}

inline std::vector<QuestionFeatures> cmd_features(const PipelineConfig& cfg,
                                                  std::ostream& log) {
  cfg.validate();
  const std::string fhash = cfg.feature_hash();
  const std::string fpath = feature_cache_path(cfg.cache_dir, fhash);

  if (std::filesystem::exists(fpath)) {
    try {
      auto feats = load_feature_table(fpath, cfg.feature_k);
      log << "features: cache hit (" << feats.size() << " questions, hash "
          << fhash << ")\n";
      return feats;
    } catch (const DataError& e) {
      log << "warning: " << e.what() << "; rebuilding feature table\n";
    }
  }

  const DatasetManifest manifest = DatasetManifest::load(cfg.data_dir);
  const Montage montage =
      load_montage_csv(cfg.data_dir + "/" + manifest.montage);
  const SpectraMap spectra = ensure_spectra(cfg, manifest, montage, log);
  auto feats = collect_features(cfg, manifest, spectra);
  save_feature_table(fpath, feats, cfg.feature_k, fhash);
  log << "features: wrote " << feats.size() << " rows (k=" << cfg.feature_k
      << ") to " << fpath << "\n";
  return feats;
}

// ---------------------------------------------------------------------------
// evaluate

namespace detail {

inline nlohmann::ordered_json scores_json(
    const std::vector<RepeatedScore>& scores) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : scores) {
    nlohmann::ordered_json row;
    row["model"] = s.model;
    row["channel"] = s.channel;
    row["mean_accuracy"] = s.mean_accuracy;
    row["std_accuracy"] = s.std_accuracy;
    row["fold_accuracies"] = s.accuracies;
    arr.push_back(std::move(row));
  }
  return arr;
}

inline nlohmann::ordered_json choices_json(
    const std::vector<SvmChoice>& choices) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : choices) {
    nlohmann::ordered_json row;
    row["fold"] = c.fold;
    row["channel"] = c.channel;
    row["c"] = c.c;
    row["gamma"] = c.gamma;
    row["inner_accuracy"] = c.inner_accuracy;
    arr.push_back(std::move(row));
  }
  return arr;
}

inline void write_fold_csv(const std::string& path,
                           const RepeatedResult& rep) {
  std::ostringstream out;
  out << "model,channel,run,fold,accuracy\n";
  for (const auto& s : rep.scores) {
    // Holdout runs score one fold each; CV runs score all of them.
    const std::size_t per_run = s.accuracies.size() /
                                static_cast<std::size_t>(rep.n_runs);
    for (std::size_t i = 0; i < s.accuracies.size(); ++i)
      out << s.model << "," << s.channel << "," << i / per_run << ","
          << i % per_run << "," << detail::format_double(s.accuracies[i]) << "\n";
  }
  std::ofstream f(path);
  f << out.str();
  if (!f) throw DataError("evaluate: failed writing " + path);
}

// Final models refit on the full dataset, one file per (model, channel).
// SVM hyperparameters come from the first run's fold-0 grid search.
inline void save_final_models(const PipelineConfig& cfg,
                              const QuestionDataset& ds,
                              const EvaluationResult& first,
                              const std::string& dir, std::ostream& log) {
  std::filesystem::create_directories(dir);
  const Eigen::MatrixXd* mats[4] = {&ds.red, &ds.green, &ds.blue, &ds.concat};
  for (int c = 0; c < 4; ++c) {
    const ScalingTransform scaler = ScalingTransform::fit(*mats[c]);
    const Eigen::MatrixXd x = scaler.apply(*mats[c]);
    nlohmann::ordered_json scaler_json;
    scaler_json["mins"] =
        std::vector<double>(scaler.mins.data(),
                            scaler.mins.data() + scaler.mins.size());
    scaler_json["ranges"] =
        std::vector<double>(scaler.ranges.data(),
                            scaler.ranges.data() + scaler.ranges.size());

    auto dump = [&](const std::string& name, nlohmann::ordered_json model) {
      nlohmann::ordered_json j;
      j["scaler"] = scaler_json;
      j["model"] = std::move(model);
      const std::string path =
          dir + "/" + name + "_" + kChannelNames[static_cast<std::size_t>(c)] +
          ".json";
      std::ofstream f(path);
      f << j.dump(2) << "\n";
      if (!f) throw DataError("evaluate: failed writing " + path);
    };

    for (int k : cfg.eval.knn_k) {
      KnnModel knn;
      knn.fit(x, ds.labels, k);
      dump("knn_k" + std::to_string(k), knn.to_json());
    }
    if (cfg.eval.run_svm) {
      SvmParams params = cfg.eval.svm_base;
      for (const auto& choice : first.svm_choices)
        if (choice.fold == 0 &&
            choice.channel == kChannelNames[static_cast<std::size_t>(c)]) {
          params.c = choice.c;
          params.gamma = choice.gamma;
        }
      RbfSvm svm;
      svm.fit(x, ds.labels, params);
      dump("svm", svm.to_json());
    }
  }
  log << "evaluate: saved final models to " << dir << "\n";
}

}  // namespace detail

struct EvaluateOutput {
  QuestionDataset dataset;
  RepeatedResult result;
};

inline EvaluateOutput cmd_evaluate(const PipelineConfig& cfg,
                                   std::ostream& log) {
  cfg.validate();
  const std::string fpath =
      feature_cache_path(cfg.cache_dir, cfg.feature_hash());
  if (!std::filesystem::exists(fpath))
    throw DataError("evaluate: feature cache " + fpath +
                    " not found; run the features step for this config first");
  const auto feats = load_feature_table(fpath, cfg.feature_k);

  EvaluateOutput out;
  out.dataset =
      make_dataset(feats, select_questions(feats, cfg.selection));
  out.result = repeated_runs(out.dataset, cfg.eval, cfg.n_runs);

  std::filesystem::create_directories(cfg.out_dir);
  nlohmann::ordered_json report;
  report["version"] = "eegtopo evaluation v1";
  report["stack_hash"] = cfg.stack_hash();
  report["feature_hash"] = cfg.feature_hash();
  report["k"] = cfg.feature_k;
  report["split"] = cfg.split;
  report["n_questions"] = out.dataset.labels.size();
  report["n_runs"] = out.result.n_runs;
  report["n_folds"] = out.result.n_folds;
  report["question_ids"] = out.dataset.ids;
  report["scores"] = detail::scores_json(out.result.scores);
  report["first_run_svm_choices"] =
      detail::choices_json(out.result.first_run.svm_choices);
  report["config"] = cfg.to_json();
  {
    const std::string path = cfg.out_dir + "/evaluation_report.json";
    std::ofstream f(path);
    f << report.dump(2) << "\n";
    if (!f) throw DataError("evaluate: failed writing " + path);
  }
  detail::write_fold_csv(cfg.out_dir + "/fold_accuracies.csv", out.result);

  if (cfg.save_models)
    detail::save_final_models(cfg, out.dataset, out.result.first_run,
                              cfg.out_dir + "/models", log);

  for (const auto& s : out.result.scores)
    log << "evaluate: " << s.model << "/" << s.channel << " accuracy "
        << detail::format_double(s.mean_accuracy) << " +- "
        << detail::format_double(s.std_accuracy) << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// compare

namespace detail {

// KNN fold accuracies for one channel matrix at a fixed K; the same shuffle
// and stratified fold plan the full evaluation uses.
inline std::vector<double> knn_fold_accuracies(const Eigen::MatrixXd& x,
                                               const std::vector<int>& labels,
                                               int knn_k, int n_folds,
                                               std::uint64_t seed) {
  const std::vector<int> order = shuffled_order(labels.size(), seed);
  const std::vector<int> fold_of = stratified_folds(labels, n_folds, &order);
  std::vector<double> acc(static_cast<std::size_t>(n_folds), 0.0);
  for (int fold = 0; fold < n_folds; ++fold) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i)
      (fold_of[i] == fold ? test : train)
          .push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd xtr(train.size(), x.cols());
    std::vector<int> ytr(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      ytr[i] = labels[static_cast<std::size_t>(train[i])];
    }
    const ScalingTransform scaler = ScalingTransform::fit(xtr);
    const Eigen::MatrixXd xtr_s = scaler.apply(xtr);
    KnnModel knn;
    knn.fit(xtr_s, ytr, knn_k);
    int hits = 0;
    for (Eigen::Index row : test) {
      const Eigen::RowVectorXd xs = scaler.apply(x.row(row));
      if (knn.predict(xs) == labels[static_cast<std::size_t>(row)]) ++hits;
    }
    acc[static_cast<std::size_t>(fold)] =
        static_cast<double>(hits) / static_cast<double>(test.size());
  }
  return acc;
}

}  // namespace detail

struct SweepCurve {
  std::vector<int> k;                      // 1..k_max
  std::array<std::vector<double>, 3> accuracy;  // red, green, blue
};

// Mean KNN cross-validation accuracy as a function of the eigenvalue count,
// per color channel. Spectra come from the sweep-stride stack cache, so every
// k is a prefix slice of one eigendecomposition.
inline SweepCurve sweep_k_curve(const PipelineConfig& cfg,
                                const SpectraMap& spectra,
                                const DatasetManifest& manifest,
                                std::ostream& log) {
  // Selection must match the evaluation's: rank by elapsed time at any k.
  PipelineConfig probe = cfg;
  probe.feature_k = 1;
  auto all = collect_features(probe, manifest, spectra);
  const auto keep = select_questions(all, cfg.selection);

  std::vector<const SpectraRecord*> rows;
  std::vector<int> labels;
  for (std::size_t i : keep) {
    const auto& f = all[i];
    rows.push_back(&spectra.at({f.subject_id, f.question_id}));
    labels.push_back(answer_label(f.answer));
  }

  SweepCurve curve;
  for (int k = 1; k <= cfg.sweep_k_max; ++k) curve.k.push_back(k);
  for (auto& v : curve.accuracy)
    v.assign(static_cast<std::size_t>(cfg.sweep_k_max), 0.0);

  parallel_for(static_cast<std::size_t>(cfg.sweep_k_max), cfg.eval.jobs,
               [&](std::size_t ki) {
                 const int k = static_cast<int>(ki) + 1;
                 for (int c = 0; c < 3; ++c) {
                   Eigen::MatrixXd x(rows.size(), k);
                   for (std::size_t i = 0; i < rows.size(); ++i) {
                     const auto& spec =
                         rows[i]->spectra[static_cast<std::size_t>(c)];
                     if (spec.size() < static_cast<std::size_t>(k))
                       throw DataError(
                           "sweep: " + rows[i]->subject_id + "/" +
                           rows[i]->question_id + " holds only " +
                           std::to_string(spec.size()) +
                           " eigenvalues; shorten the sweep or lower the "
                           "stride");
                     x.row(static_cast<Eigen::Index>(i)) =
                         Eigen::Map<const Eigen::VectorXd>(spec.data(), k)
                             .transpose();
                   }
                   const auto acc = detail::knn_fold_accuracies(
                       x, labels, cfg.sweep_knn_k, cfg.eval.n_folds,
                       cfg.eval.seed);
                   curve.accuracy[static_cast<std::size_t>(c)][ki] =
                       mean(acc);
                 }
               });
  log << "compare: swept k=1.." << cfg.sweep_k_max << " on "
      << rows.size() << " questions\n";
  return curve;
}

namespace detail {

inline void write_sweep_csv(const std::string& path, const SweepCurve& curve) {
  std::ostringstream out;
  out << "k,red,green,blue\n";
  for (std::size_t i = 0; i < curve.k.size(); ++i)
    out << curve.k[i] << "," << detail::format_double(curve.accuracy[0][i]) << ","
        << detail::format_double(curve.accuracy[1][i]) << ","
        << detail::format_double(curve.accuracy[2][i]) << "\n";
  std::ofstream f(path);
  f << out.str();
  if (!f) throw DataError("compare: failed writing " + path);
}

inline SweepCurve condition_sweep(const PipelineConfig& cfg,
                                  std::ostream& log) {
  PipelineConfig sweep_cfg = cfg;
  sweep_cfg.topomap.stride = cfg.sweep_stride;
  const DatasetManifest manifest = DatasetManifest::load(sweep_cfg.data_dir);
  const Montage montage =
      load_montage_csv(sweep_cfg.data_dir + "/" + manifest.montage);
  const SpectraMap spectra =
      ensure_spectra(sweep_cfg, manifest, montage, log);
  return sweep_k_curve(sweep_cfg, spectra, manifest, log);
}

}  // namespace detail

struct CompareOutput {
  RepeatedResult result_a, result_b;
  std::vector<std::pair<std::string, TTestResult>> tests;  // "model/channel"
  SweepCurve sweep_a, sweep_b;
};

inline CompareOutput cmd_compare(const PipelineConfig& cfg_a,
                                 const PipelineConfig& cfg_b,
                                 const std::string& out_dir,
                                 std::ostream& log) {
  cfg_a.validate();
  cfg_b.validate();
  if (out_dir.empty()) throw ConfigError("compare: empty output directory");

  CompareOutput out;
  for (int side = 0; side < 2; ++side) {
    const PipelineConfig& cfg = side == 0 ? cfg_a : cfg_b;
    const auto feats = cmd_features(cfg, log);
    const auto ds = make_dataset(feats, select_questions(feats, cfg.selection));
    (side == 0 ? out.result_a : out.result_b) =
        repeated_runs(ds, cfg.eval, cfg.n_runs);
  }

  // Welch's t-test per (model, channel) present in both conditions, on the
  // pooled per-fold accuracies.
  for (const auto& sa : out.result_a.scores)
    for (const auto& sb : out.result_b.scores)
      if (sa.model == sb.model && sa.channel == sb.channel)
        out.tests.emplace_back(sa.model + "/" + sa.channel,
                               welch_t_test(sa.accuracies, sb.accuracies));

  out.sweep_a = detail::condition_sweep(cfg_a, log);
  out.sweep_b = detail::condition_sweep(cfg_b, log);

  std::filesystem::create_directories(out_dir);
  detail::write_sweep_csv(out_dir + "/sweep_a.csv", out.sweep_a);
  detail::write_sweep_csv(out_dir + "/sweep_b.csv", out.sweep_b);

  {
    std::vector<SvgSeries> series;
    const char* colors_a[3] = {"#d62728", "#2ca02c", "#1f77b4"};
    const char* colors_b[3] = {"#ff9896", "#98df8a", "#aec7e8"};
    for (int c = 0; c < 3; ++c) {
      std::vector<double> kx(out.sweep_a.k.begin(), out.sweep_a.k.end());
      series.push_back({std::string("a ") + kSpectraChannels[
                            static_cast<std::size_t>(c)],
                        colors_a[c], kx,
                        out.sweep_a.accuracy[static_cast<std::size_t>(c)]});
      std::vector<double> kx_b(out.sweep_b.k.begin(), out.sweep_b.k.end());
      series.push_back({std::string("b ") + kSpectraChannels[
                            static_cast<std::size_t>(c)],
                        colors_b[c], kx_b,
                        out.sweep_b.accuracy[static_cast<std::size_t>(c)]});
    }
    write_line_chart(out_dir + "/sweep.svg",
                     "KNN accuracy vs eigenvalue count", "k", "accuracy",
                     series);
  }

  nlohmann::ordered_json report;
  report["version"] = "eegtopo comparison v1";
  report["condition_a"] = nlohmann::ordered_json{
      {"data_dir", cfg_a.data_dir}, {"feature_hash", cfg_a.feature_hash()}};
  report["condition_b"] = nlohmann::ordered_json{
      {"data_dir", cfg_b.data_dir}, {"feature_hash", cfg_b.feature_hash()}};
  report["scores_a"] = detail::scores_json(out.result_a.scores);
  report["scores_b"] = detail::scores_json(out.result_b.scores);
  auto tests = nlohmann::ordered_json::array();
  for (const auto& [name, t] : out.tests) {
    nlohmann::ordered_json row;
    row["comparison"] = name;
    row["t"] = t.t;
    row["df"] = t.df;
    row["p"] = t.p;
    row["mean_a"] = t.mean_a;
    row["mean_b"] = t.mean_b;
    row["std_a"] = t.std_a;
    row["std_b"] = t.std_b;
    row["n_a"] = t.n_a;
    row["n_b"] = t.n_b;
    tests.push_back(std::move(row));
  }
  report["t_tests"] = std::move(tests);
  {
    const std::string path = out_dir + "/comparison.json";
    std::ofstream f(path);
    f << report.dump(2) << "\n";
    if (!f) throw DataError("compare: failed writing " + path);
  }

  for (const auto& [name, t] : out.tests)
    log << "compare: " << name << " t=" << detail::format_double(t.t)
        << " p=" << detail::format_double(t.p) << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// times

struct TimesSummary {
  struct Row {
    std::string cls;
    std::size_t n{0};
    double mean_s{0.0};
    double std_s{0.0};
  };
  std::vector<Row> rows;       // only classes with responses
  std::vector<std::string> empty_classes;
};

// Answer-time table straight from the event logs; recordings stay untouched.
inline TimesSummary cmd_times(const PipelineConfig& cfg,
                              const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  const DatasetManifest manifest = DatasetManifest::load(cfg.data_dir);

  std::vector<double> correct, incorrect;
  for (const auto& entry : manifest.subjects) {
    const EventLog events =
        load_events(cfg.data_dir + "/" + entry.events, manifest.sample_rate_hz);
    for (const auto& ev : events.entries) {
      if (ev.excluded) continue;
      (ev.answer == Answer::Correct ? correct : incorrect)
          .push_back(ev.elapsed_seconds(manifest.sample_rate_hz));
    }
  }

  TimesSummary summary;
  std::ostringstream csv;
  csv << "class,n,mean_s,std_s\n";
  const std::pair<const char*, const std::vector<double>*> classes[2] = {
      {"correct", &correct}, {"incorrect", &incorrect}};
  for (const auto& [name, times] : classes) {
    if (times->empty()) {
      summary.empty_classes.emplace_back(name);
      csv << "# class " << name << ": no responses\n";
      continue;
    }
    TimesSummary::Row row;
    row.cls = name;
    row.n = times->size();
    row.mean_s = mean(*times);
    row.std_s = times->size() > 1 ? sample_std(*times) : 0.0;
    csv << row.cls << "," << row.n << "," << detail::format_double(row.mean_s) << ","
        << detail::format_double(row.std_s) << "\n";
    summary.rows.push_back(row);
  }

  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/times.csv";
  std::ofstream f(path);
  f << csv.str();
  if (!f) throw DataError("times: failed writing " + path);

  for (const auto& r : summary.rows)
    log << "times: " << r.cls << " n=" << r.n << " mean="
        << detail::format_double(r.mean_s) << "s std=" << detail::format_double(r.std_s)
        << "s\n";
  for (const auto& name : summary.empty_classes)
    log << "times: class " << name << " has no responses; row omitted\n";
  return summary;
}

}  // namespace eegtopo
