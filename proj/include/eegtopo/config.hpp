#pragma once

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "eegtopo/classify.hpp"
#include "eegtopo/eigenfeat.hpp"
#include "eegtopo/evaluate.hpp"
#include "eegtopo/filter.hpp"
#include "eegtopo/ocular.hpp"
#include "eegtopo/synth.hpp"
#include "eegtopo/topomap.hpp"
#include "eegtopo/util.hpp"

namespace eegtopo {
namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const char* section,
                                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(std::string("config: '") + section +
                      "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError(std::string("config: unknown key '") + section + "." +
                        it.key() + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: key '") + key +
                      "' has the wrong type");
  }
}

}  // namespace detail

// One declarative file drives every subcommand. Unknown keys are rejected so
// typos cannot silently fall back to defaults; CLI flags (--out, --seed,
// --jobs) override the corresponding config values.
struct PipelineConfig {
  std::string data_dir{"out/data"};
  std::string cache_dir{"out/cache"};
  std::string out_dir{"out"};

  SynthesisConfig synth;
  BandpassSpec bandpass;
  OcularSpec ocular;
  TopomapSpec topomap;  // grid_size + frame stride
  int feature_k{3};

  SelectionPolicy selection;
  EvalSpec eval;  // eval.jobs is supplied by the CLI, never by the file
  int n_runs{3};
  std::string split{"cv"};  // "cv" or "holdout" (single 50:50 split)
  bool save_models{false};

  int sweep_k_max{100};
  int sweep_stride{1};
  int sweep_knn_k{5};

  void validate() const {
    if (data_dir.empty() || cache_dir.empty() || out_dir.empty())
      throw ConfigError("config: paths must be non-empty");
    synth.validate();
    bandpass.validate(synth.sample_rate_hz);
    ocular.validate();
    topomap.validate();
    FeatureSpec{feature_k, topomap.stride}.validate();
    selection.validate();
    eval.validate();
    if (n_runs < 1) throw ConfigError("config: n_runs must be >= 1");
    if (split != "cv" && split != "holdout")
      throw ConfigError("config: split must be 'cv' or 'holdout'");
    if (sweep_k_max < 1 || sweep_k_max > kMaxFeatureK)
      throw ConfigError("config: sweep_k_max must be in [1, " +
                        std::to_string(kMaxFeatureK) + "]");
    if (sweep_stride < 1) throw ConfigError("config: sweep_stride must be >= 1");
    if (sweep_knn_k < 1 || sweep_knn_k % 2 == 0)
      throw ConfigError("config: sweep_knn_k must be positive and odd");
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    using detail::get_or;
    detail::reject_unknown_keys(
        j, "",
        {"version", "data_dir", "cache_dir", "out_dir", "synth", "preprocess",
         "topomap", "features", "evaluate", "sweep"});
    const int version = get_or(j, "version", 1);
    if (version != 1)
      throw ConfigError("config: unsupported version " +
                        std::to_string(version));
    PipelineConfig c;
    c.data_dir = get_or(j, "data_dir", c.data_dir);
    c.cache_dir = get_or(j, "cache_dir", c.cache_dir);
    c.out_dir = get_or(j, "out_dir", c.out_dir);

    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      detail::reject_unknown_keys(
          s, "synth",
          {"n_subjects", "n_questions", "sample_rate_hz", "class_separation",
           "correct_time_mean_s", "correct_time_std_s", "incorrect_time_mean_s",
           "incorrect_time_std_s", "rng_seed", "background_rms_uv",
           "sensor_noise_uv", "activity_scale_uv"});
      c.synth.n_subjects = get_or(s, "n_subjects", c.synth.n_subjects);
      c.synth.n_questions = get_or(s, "n_questions", c.synth.n_questions);
      c.synth.sample_rate_hz =
          get_or(s, "sample_rate_hz", c.synth.sample_rate_hz);
      c.synth.class_separation =
          get_or(s, "class_separation", c.synth.class_separation);
      c.synth.correct_time.mean_s =
          get_or(s, "correct_time_mean_s", c.synth.correct_time.mean_s);
      c.synth.correct_time.std_s =
          get_or(s, "correct_time_std_s", c.synth.correct_time.std_s);
      c.synth.incorrect_time.mean_s =
          get_or(s, "incorrect_time_mean_s", c.synth.incorrect_time.mean_s);
      c.synth.incorrect_time.std_s =
          get_or(s, "incorrect_time_std_s", c.synth.incorrect_time.std_s);
      c.synth.rng_seed = get_or(s, "rng_seed", c.synth.rng_seed);
      c.synth.background_rms_uv =
          get_or(s, "background_rms_uv", c.synth.background_rms_uv);
      c.synth.sensor_noise_uv =
          get_or(s, "sensor_noise_uv", c.synth.sensor_noise_uv);
      c.synth.activity_scale_uv =
          get_or(s, "activity_scale_uv", c.synth.activity_scale_uv);
    }

    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      detail::reject_unknown_keys(
          p, "preprocess",
          {"low_cut_hz", "high_cut_hz", "order", "zero_phase",
           "blink_threshold_uv", "blink_window_s", "ocular_fit_on_full_record"});
      c.bandpass.low_cut_hz = get_or(p, "low_cut_hz", c.bandpass.low_cut_hz);
      c.bandpass.high_cut_hz = get_or(p, "high_cut_hz", c.bandpass.high_cut_hz);
      c.bandpass.order = get_or(p, "order", c.bandpass.order);
      c.bandpass.zero_phase = get_or(p, "zero_phase", c.bandpass.zero_phase);
      c.ocular.blink_threshold_uv =
          get_or(p, "blink_threshold_uv", c.ocular.blink_threshold_uv);
      c.ocular.window_s = get_or(p, "blink_window_s", c.ocular.window_s);
      c.ocular.fit_on_full_record =
          get_or(p, "ocular_fit_on_full_record", c.ocular.fit_on_full_record);
    }

    if (j.contains("topomap")) {
      const auto& t = j.at("topomap");
      detail::reject_unknown_keys(t, "topomap", {"grid_size", "stride"});
      c.topomap.grid_size = get_or(t, "grid_size", c.topomap.grid_size);
      c.topomap.stride = get_or(t, "stride", c.topomap.stride);
    }

    if (j.contains("features")) {
      const auto& f = j.at("features");
      detail::reject_unknown_keys(f, "features", {"k"});
      c.feature_k = get_or(f, "k", c.feature_k);
    }

    if (j.contains("evaluate")) {
      const auto& e = j.at("evaluate");
      detail::reject_unknown_keys(
          e, "evaluate",
          {"n_per_class", "n_folds", "knn_k", "run_svm", "svm_c_grid",
           "svm_gamma_grid", "inner_folds", "svm_tol", "svm_max_iters", "seed",
           "n_runs", "split", "save_models"});
      c.selection.n_per_class =
          get_or(e, "n_per_class", c.selection.n_per_class);
      c.eval.n_folds = get_or(e, "n_folds", c.eval.n_folds);
      c.eval.knn_k = get_or(e, "knn_k", c.eval.knn_k);
      c.eval.run_svm = get_or(e, "run_svm", c.eval.run_svm);
      c.eval.grid.c_values = get_or(e, "svm_c_grid", c.eval.grid.c_values);
      c.eval.grid.gamma_values =
          get_or(e, "svm_gamma_grid", c.eval.grid.gamma_values);
      c.eval.grid.n_folds = get_or(e, "inner_folds", c.eval.grid.n_folds);
      c.eval.svm_base.tol = get_or(e, "svm_tol", c.eval.svm_base.tol);
      c.eval.svm_base.max_iters =
          get_or(e, "svm_max_iters", c.eval.svm_base.max_iters);
      c.eval.seed = get_or(e, "seed", c.eval.seed);
      c.n_runs = get_or(e, "n_runs", c.n_runs);
      c.split = get_or(e, "split", c.split);
      c.save_models = get_or(e, "save_models", c.save_models);
    }

    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      detail::reject_unknown_keys(s, "sweep", {"k_max", "stride", "knn_k"});
      c.sweep_k_max = get_or(s, "k_max", c.sweep_k_max);
      c.sweep_stride = get_or(s, "stride", c.sweep_stride);
      c.sweep_knn_k = get_or(s, "knn_k", c.sweep_knn_k);
    }

    if (c.split == "holdout") {
      c.eval.holdout = true;
      c.eval.n_folds = 2;  // holdout is one stratified 50:50 split
    }
    c.validate();
    return c;
  }

  static PipelineConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: " + path + " is not valid json: " + e.what());
    }
    return from_json(j);
  }

  // Canonical echo of every setting; also the hashing input.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["data_dir"] = data_dir;
    j["cache_dir"] = cache_dir;
    j["out_dir"] = out_dir;
    j["synth"] = {{"n_subjects", synth.n_subjects},
                  {"n_questions", synth.n_questions},
                  {"sample_rate_hz", synth.sample_rate_hz},
                  {"class_separation", synth.class_separation},
                  {"correct_time_mean_s", synth.correct_time.mean_s},
                  {"correct_time_std_s", synth.correct_time.std_s},
                  {"incorrect_time_mean_s", synth.incorrect_time.mean_s},
                  {"incorrect_time_std_s", synth.incorrect_time.std_s},
                  {"rng_seed", synth.rng_seed},
                  {"background_rms_uv", synth.background_rms_uv},
                  {"sensor_noise_uv", synth.sensor_noise_uv},
                  {"activity_scale_uv", synth.activity_scale_uv}};
    j["preprocess"] = {
        {"low_cut_hz", bandpass.low_cut_hz},
        {"high_cut_hz", bandpass.high_cut_hz},
        {"order", bandpass.order},
        {"zero_phase", bandpass.zero_phase},
        {"blink_threshold_uv", ocular.blink_threshold_uv},
        {"blink_window_s", ocular.window_s},
        {"ocular_fit_on_full_record", ocular.fit_on_full_record}};
    j["topomap"] = {{"grid_size", topomap.grid_size},
                    {"stride", topomap.stride}};
    j["features"] = {{"k", feature_k}};
    j["evaluate"] = {{"n_per_class", selection.n_per_class},
                     {"n_folds", eval.n_folds},
                     {"knn_k", eval.knn_k},
                     {"run_svm", eval.run_svm},
                     {"svm_c_grid", eval.grid.c_values},
                     {"svm_gamma_grid", eval.grid.gamma_values},
                     {"inner_folds", eval.grid.n_folds},
                     {"svm_tol", eval.svm_base.tol},
                     {"svm_max_iters", eval.svm_base.max_iters},
                     {"seed", eval.seed},
                     {"n_runs", n_runs},
                     {"split", split},
                     {"save_models", save_models}};
    j["sweep"] = {{"k_max", sweep_k_max},
                  {"stride", sweep_stride},
                  {"knn_k", sweep_knn_k}};
    return j;
  }

  // Versions the spectra cache: everything that shapes the per-question
  // leading spectra, which is every stage up to and including rendering.
  std::string stack_hash() const {
    nlohmann::ordered_json j = to_json();
    j.erase("out_dir");
    j.erase("evaluate");
    j.erase("sweep");
    j["features"].erase("k");
    return to_hex16(fnv1a64(j.dump()));
  }

  // Versions the feature table: the spectra identity plus k.
  std::string feature_hash() const {
    return to_hex16(fnv1a64(stack_hash() + ":k=" + std::to_string(feature_k)));
  }
};

}  // namespace eegtopo
