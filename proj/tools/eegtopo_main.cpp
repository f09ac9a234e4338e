// Command-line front end. Subcommands mirror the pipeline stages; every one
// takes --config/--out/--jobs/--seed. Exit codes: 0 success, 2 configuration
// error, 3 data error, 4 numerical failure.

#include <eegtopo/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out;
  int jobs{1};
  std::int64_t seed{-1};  // negative: keep the seeds from the config
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "pipeline config (JSON)")
      ->required();
  cmd->add_option("--out", o.out, "override the command's output directory");
  cmd->add_option("--jobs", o.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed,
                  "override the synthesis and shuffle seeds");
}

eegtopo::PipelineConfig load_config(const CommonOpts& o) {
  auto cfg = eegtopo::PipelineConfig::load(o.config_path);
  cfg.eval.jobs = o.jobs;
  if (o.seed >= 0) {
    cfg.synth.rng_seed = static_cast<std::uint64_t>(o.seed);
    cfg.eval.seed = static_cast<std::uint64_t>(o.seed);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG topomap eigenvalue pipeline"};
  app.require_subcommand(1);

  CommonOpts synth_o, feat_o, eval_o, cmp_o, times_o;
  std::string config_b_path;

  auto* synth =
      app.add_subcommand("synth", "generate a synthetic dataset on disk");
  add_common(synth, synth_o);
  auto* features = app.add_subcommand(
      "features", "preprocess, render topomaps, cache eigenvalue features");
  add_common(features, feat_o);
  auto* evaluate = app.add_subcommand(
      "evaluate", "cross-validate classifiers on cached features");
  add_common(evaluate, eval_o);
  auto* compare = app.add_subcommand(
      "compare", "evaluate two conditions and test the accuracy difference");
  add_common(compare, cmp_o);
  compare->add_option("--config-b", config_b_path, "second condition config")
      ->required();
  auto* times =
      app.add_subcommand("times", "summarize answer times per class");
  add_common(times, times_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      auto cfg = load_config(synth_o);
      if (!synth_o.out.empty()) cfg.data_dir = synth_o.out;
      eegtopo::cmd_synth(cfg, std::cout);
    } else if (features->parsed()) {
      auto cfg = load_config(feat_o);
      if (!feat_o.out.empty()) cfg.cache_dir = feat_o.out;
      eegtopo::cmd_features(cfg, std::cout);
    } else if (evaluate->parsed()) {
      auto cfg = load_config(eval_o);
      if (!eval_o.out.empty()) cfg.out_dir = eval_o.out;
      eegtopo::cmd_evaluate(cfg, std::cout);
    } else if (compare->parsed()) {
      const auto cfg_a = load_config(cmp_o);
      CommonOpts b = cmp_o;
      b.config_path = config_b_path;
      const auto cfg_b = load_config(b);
      const std::string out_dir =
          cmp_o.out.empty() ? cfg_a.out_dir : cmp_o.out;
      eegtopo::cmd_compare(cfg_a, cfg_b, out_dir, std::cout);
    } else if (times->parsed()) {
      const auto cfg = load_config(times_o);
      const std::string out_dir =
          times_o.out.empty() ? cfg.out_dir : times_o.out;
      eegtopo::cmd_times(cfg, out_dir, std::cout);
    }
  } catch (const eegtopo::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const eegtopo::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const eegtopo::NumericalError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
