// Command-line front end: learn, infer, evaluate, analyze-js, probe.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longguide/longguide.hpp"

namespace fs = std::filesystem;
using namespace longguide;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string iso8601(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// SOURCE_DATE_EPOCH wins; deterministic backends get the epoch so reruns are byte-identical.
std::string creation_time(const Backend& backend) {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return iso8601(static_cast<std::time_t>(std::stoll(epoch)));
  if (backend.deterministic()) return iso8601(0);
  return iso8601(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    auto piece = std::string(str::trim(std::string_view(s).substr(start, comma - start)));
    if (!piece.empty()) out.push_back(piece);
    start = comma + 1;
  }
  return out;
}

std::vector<NamedRun> load_runs(const std::string& list) {
  std::vector<NamedRun> runs;
  for (const auto& path : split_commas(list)) runs.push_back({fs::path(path).stem().string(), read_outputs(path)});
  if (runs.empty()) throw ConfigError("--outputs names no files");
  return runs;
}

const BackendSettings& judge_settings(const Config& cfg) { return cfg.judge ? *cfg.judge : cfg.backend; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn task guidelines from a few labelled samples and run guided generation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string bundle_path;
  std::string dataset_path;
  std::string variant;
  std::string demos_path;
  std::string outputs;
  std::string report_path;
  std::string property;
  std::string variants_mode;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool skip_step2 = false;
  bool with_guideline = false;
  bool use_judge = false;
  std::string mock_script;

  auto* learn_cmd = app.add_subcommand("learn", "Learn a guideline bundle from the training split");
  learn_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  learn_cmd->add_option("--out", out_path, "Bundle output path")->required();
  learn_cmd->add_flag("--skip-step2", skip_step2, "Build the metric guideline from raw definitions");
  learn_cmd->add_option("--variants", variants_mode, "all | ocg-only");
  learn_cmd->add_option("--mock-script", mock_script, "Override the mock backend's script");

  auto* infer_cmd = app.add_subcommand("infer", "Generate outputs with a learned bundle");
  infer_cmd->add_option("--config", config_path)->required();
  infer_cmd->add_option("--bundle", bundle_path)->required();
  infer_cmd->add_option("--dataset", dataset_path)->required();
  infer_cmd->add_option("--out", out_path)->required();
  infer_cmd->add_option("--variant", variant, "none | ocg | mg | mg-ocg (default: bundle's choice)");
  infer_cmd->add_option("--demos", demos_path, "Demonstration pool (JSONL)");
  infer_cmd->add_option("--shots", shots, "Number of demonstrations")->default_val(0);
  auto* seed_opt = infer_cmd->add_option("--seed", seed, "Demonstration sampling seed");
  infer_cmd->add_option("--mock-script", mock_script, "Override the mock backend's script");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score outputs against references");
  eval_cmd->add_option("--outputs", outputs, "Comma-separated outputs files, one per run")->required();
  eval_cmd->add_option("--report", report_path, "CSV report path")->required();
  eval_cmd->add_option("--config", config_path, "Configuration holding the judge backend");
  eval_cmd->add_flag("--judge", use_judge, "Add judge ratings (needs --config)");

  auto* js_cmd = app.add_subcommand("analyze-js", "Judge-score divergence between outputs and references");
  js_cmd->add_option("--outputs", outputs, "Comma-separated outputs files, one per group")->required();
  js_cmd->add_option("--bundle", bundle_path)->required();
  js_cmd->add_option("--report", report_path)->required();
  js_cmd->add_option("--config", config_path, "Configuration holding the judge backend")->required();

  auto* probe_cmd = app.add_subcommand("probe", "Check whether outputs keep a property shown by demonstrations");
  probe_cmd->add_option("--config", config_path)->required();
  probe_cmd->add_option("--property", property, "Metric name, 'tokens' or 'sentences'")->required();
  probe_cmd->add_option("--shots", shots)->required();
  probe_cmd->add_flag("--with-guideline", with_guideline);
  probe_cmd->add_option("--report", report_path, "Optional JSON report path");
  probe_cmd->add_option("--mock-script", mock_script, "Override the mock backend's script");

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  try {
    if (*learn_cmd) {
      auto cfg = load_config(config_path);
      if (!mock_script.empty()) cfg.backend.mock_script = fs::absolute(mock_script);
      if (skip_step2) cfg.learn.skip_step2 = true;
      if (!variants_mode.empty()) {
        if (variants_mode != "all" && variants_mode != "ocg-only") throw ConfigError("--variants must be all or ocg-only");
        cfg.learn.variants = variants_mode;
      }
      auto train = load_dataset(cfg.resolve(cfg.train_path), cfg.learn.train_cap);
      auto backend = make_backend(cfg.backend, cfg);
      const Generator model(*backend, call_settings(cfg.backend));
      auto bundle = learn(cfg, train, model, {creation_time(*backend)});
      save_bundle(bundle, out_path);
      print_warnings(bundle.warnings);
      std::cerr << "selected variant: " << to_string(bundle.selected) << '\n'
                << "backend calls: " << backend->call_count() << '\n';
    } else if (*infer_cmd) {
      auto cfg = load_config(config_path);
      if (!mock_script.empty()) cfg.backend.mock_script = fs::absolute(mock_script);
      auto bundle = load_bundle(bundle_path);
      auto dataset = load_dataset(dataset_path);
      auto backend = make_backend(cfg.backend, cfg);
      const Generator model(*backend, call_settings(cfg.backend));
      InferOptions opts;
      if (!variant.empty()) opts.variant = parse_variant(variant);
      opts.shots = shots;
      opts.seed = seed_given ? seed : cfg.seed;
      if (shots > 0) {
        fs::path pool = demos_path.empty() ? cfg.resolve(cfg.demos_path) : fs::path(demos_path);
        if (pool.empty()) throw ConfigError("--shots needs --demos or task.demos");
        opts.demo_pool = load_dataset(pool).samples;
      }
      TaskSpec task = cfg.task;
      if (task.instruction.empty()) task.instruction = bundle.instruction;
      auto result = infer(task, bundle, dataset, model, opts);
      write_outputs(result.records, out_path);
      print_warnings(dataset.warnings);
      print_warnings(result.warnings);
      std::cerr << "variant: " << to_string(result.variant) << ", samples: " << result.records.size() << '\n';
    } else if (*eval_cmd) {
      auto runs = load_runs(outputs);
      std::optional<Config> cfg;
      std::unique_ptr<Backend> judge_backend;
      std::optional<Generator> judge;
      std::vector<std::string> warnings;
      JudgeFn judge_fn;
      if (use_judge) {
        if (config_path.empty()) throw ConfigError("--judge needs --config");
        cfg = load_config(config_path);
        judge_backend = make_backend(judge_settings(*cfg), *cfg);
        judge.emplace(*judge_backend, call_settings(judge_settings(*cfg)));
        judge_fn = [&](const OutputRecord& rec) {
          const std::string user_prompt = cfg->task.instruction + "\n" + rec.input;
          return judge_evaluate(user_prompt, rec.reference, rec.output, *judge, &warnings);
        };
      }
      auto report = evaluate(runs, judge_fn);
      write_text(report_path, report_csv(report));
      print_warnings(warnings);
      std::cout << report_markdown(report);
    } else if (*js_cmd) {
      auto cfg = load_config(config_path);
      auto bundle = load_bundle(bundle_path);
      auto runs = load_runs(outputs);
      auto judge_backend = make_backend(judge_settings(cfg), cfg);
      const Generator judge(*judge_backend, call_settings(judge_settings(cfg)));
      auto report = analyze_js(runs, bundle, judge);
      write_text(report_path, js_report_csv(report));
      print_warnings(report.warnings);
      std::cout << js_report_csv(report);
    } else if (*probe_cmd) {
      auto cfg = load_config(config_path);
      if (!mock_script.empty()) cfg.backend.mock_script = fs::absolute(mock_script);
      if (cfg.probe.demo_pool.empty() || cfg.probe.eval_set.empty())
        throw ConfigError("probe needs probe.demo_pool and probe.eval_set in the config");
      auto pool = load_demo_pool(cfg.resolve(cfg.probe.demo_pool));
      auto eval = load_dataset(cfg.resolve(cfg.probe.eval_set));
      auto backend = make_backend(cfg.backend, cfg);
      const Generator model(*backend, call_settings(cfg.backend));
      std::unique_ptr<Backend> judge_backend;
      std::optional<Generator> judge;
      ProbeConfig pc;
      pc.property = property;
      pc.shots = static_cast<int>(shots);
      pc.target_score = cfg.probe.target_score;
      pc.target_tokens = cfg.probe.target_tokens;
      pc.target_sentences = cfg.probe.target_sentences;
      pc.with_guideline = with_guideline;
      pc.judge_self_consistency = cfg.probe.judge_self_consistency;
      if (!pc.counted()) {
        judge_backend = make_backend(judge_settings(cfg), cfg);
        judge.emplace(*judge_backend, call_settings(judge_settings(cfg)));
      }
      auto report = probe(pc, pool, eval, cfg.task, model, judge ? &*judge : nullptr, cfg.text);
      print_warnings(report.warnings);
      std::cout << probe_report_markdown(report);
      if (!report_path.empty()) {
        nlohmann::json j{{"property", report.property},     {"shots", report.shots},
                         {"with_guideline", report.with_guideline}, {"demo_indices", report.demo_indices},
                         {"evaluated", report.evaluated},   {"attained", report.attained},
                         {"attainment_pct", report.attainment_pct}, {"nt_mean", report.nt_mean},
                         {"nt_std", report.nt_std},         {"ns_mean", report.ns_mean},
                         {"ns_std", report.ns_std}};
        write_text(report_path, j.dump(2) + "\n");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
