// deme: batch entry point for the HVAC step-insertion experiment, the
// prompt-decoration similarity run and the method-path operator demo.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "deme/deme.hpp"
#include "deme/net.hpp"

#ifndef DEME_DEFAULT_FIXTURES
#define DEME_DEFAULT_FIXTURES "fixtures"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> rounds;
  std::string out_dir = "out";
  bool remote = false;
  unsigned jobs = 1;
  std::string fixtures;
  bool traces = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

deme::config::ExperimentConfig load_config(const Options& opt) {
  deme::config::ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    if (!fs::exists(opt.config_path)) throw UsageError("config file '" + opt.config_path + "' does not exist");
    try {
      cfg = deme::config::load(opt.config_path);
    } catch (const deme::Error& e) {
      throw UsageError(e.what());
    }
  }
  if (opt.seed) cfg.hvac.seed = *opt.seed;
  if (opt.episodes) cfg.episodes = *opt.episodes;
  if (opt.rounds) cfg.prompt_eval.rounds = *opt.rounds;
  if (cfg.episodes < 1) throw UsageError("--episodes must be >= 1");
  if (cfg.prompt_eval.rounds < 1) throw UsageError("--rounds must be >= 1");
  if (opt.jobs < 1) throw UsageError("--jobs must be >= 1");
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw deme::Error(deme::ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
}

std::string report_svg(const deme::hvac::ExperimentReport& r) {
  using deme::svg::Panel;
  using deme::svg::Series;
  auto column = [](const auto& rows, auto get) {
    std::vector<std::optional<double>> out;
    for (const auto& m : rows) out.push_back(get(m));
    return out;
  };
  std::vector<Panel> panels{
      {"ErrOcc (degC)",
       {{"B", "#1f77b4", column(r.baseline, [](auto& m) { return m.err_occ; })},
        {"D", "#d62728", column(r.decorated, [](auto& m) { return m.err_occ; })}}},
      {"E_total (kWh)",
       {{"B", "#1f77b4", column(r.baseline, [](auto& m) { return std::optional<double>(m.e_total); })},
        {"D", "#d62728", column(r.decorated, [](auto& m) { return std::optional<double>(m.e_total); })}}},
      {"E_waste (kWh)",
       {{"B", "#1f77b4", column(r.baseline, [](auto& m) { return std::optional<double>(m.e_waste); })},
        {"D", "#d62728", column(r.decorated, [](auto& m) { return std::optional<double>(m.e_waste); })}}},
      {"Anomalies",
       {{"EnvAnom B", "#1f77b4", column(r.baseline, [](auto& m) { return std::optional<double>(m.env_anom); })},
        {"EnvAnom D", "#d62728", column(r.decorated, [](auto& m) { return std::optional<double>(m.env_anom); })},
        {"N_Anom D", "#2ca02c", column(r.decorated, [](auto& m) { return std::optional<double>(m.n_anom); })}}},
  };
  return deme::svg::line_charts(panels);
}

int cmd_hvac(const Options& opt) {
  auto cfg = load_config(opt);
  deme::net::set_network_allowed(false);
  auto report = deme::hvac::run_experiment(cfg.hvac, cfg.controller, cfg.episodes, opt.jobs);

  fs::create_directories(opt.out_dir);
  const fs::path out = opt.out_dir;
  deme::hvac::write_report_csv(report, out / "hvac_report.csv");
  write_text(out / "hvac_report.svg", report_svg(report));

  if (opt.traces) {
    fs::create_directories(out / "traces");
    for (int i = 0; i < cfg.episodes; ++i) {
      auto pair = deme::hvac::run_episode_pair(cfg.hvac, cfg.controller, i);
      char name[32];
      std::snprintf(name, sizeof name, "ep%02d", i + 1);
      deme::hvac::write_trace_csv(pair.baseline, out / "traces" / (std::string(name) + "_b.csv"));
      deme::hvac::write_trace_csv(pair.decorated, out / "traces" / (std::string(name) + "_d.csv"));
    }
  }

  // Keep both controller paths in the experience store, scored by mean J.
  const auto mb = report.mean_baseline();
  const auto md = report.mean_decorated();
  auto mean_score = [](const deme::hvac::MeanMetrics& m) { return -(m.e_waste + m.env_anom); };
  deme::LearnedMethodStore store;
  store.record("hvac-cooling", deme::hvac::build_baseline_controller(cfg.hvac, cfg.controller).path(), mean_score(mb));
  store.record("hvac-cooling", deme::hvac::build_decorated_controller(cfg.hvac, cfg.controller).path(),
               mean_score(md));
  deme::save_store(store, out / "learned_store.json");

  auto cell = [](const std::optional<double>& v) { return v ? deme::util::fixed(*v) : std::string(); };
  std::cout << deme::hvac::kReportCsvHeader << '\n'
            << "mean," << cell(mb.err_occ) << ',' << cell(md.err_occ) << ',' << deme::util::fixed(mb.e_total) << ','
            << deme::util::fixed(md.e_total) << ',' << deme::util::fixed(mb.e_waste) << ','
            << deme::util::fixed(md.e_waste) << ',' << deme::util::fixed(mb.env_anom) << ','
            << deme::util::fixed(md.env_anom) << ',' << deme::util::fixed(md.n_anom) << '\n';
  return kOk;
}

std::optional<deme::prompt::FixtureCorpus> try_fixtures(const fs::path& dir, std::string* why) {
  try {
    return deme::prompt::load_fixtures(dir);
  } catch (const deme::Error& e) {
    if (why) *why = e.what();
    return std::nullopt;
  }
}

int cmd_prompt_eval(const Options& opt) {
  auto cfg = load_config(opt);
  const auto scenario = deme::prompt::brake_scenario();
  const auto prompts = deme::prompt::build_prompts(scenario);
  fs::path fixture_dir = DEME_DEFAULT_FIXTURES;
  if (!cfg.prompt_eval.fixtures.empty()) fixture_dir = cfg.prompt_eval.fixtures;
  if (!opt.fixtures.empty()) fixture_dir = opt.fixtures;

  std::optional<deme::prompt::SimilarityTable> table;
  if (opt.remote) {
    auto key = deme::net::api_key_from_env();
    if (!key) throw UsageError(std::string("--remote needs the ") + deme::net::kApiKeyVariable + " environment variable");
    deme::net::set_network_allowed(true);
    deme::net::Endpoint chat{cfg.prompt_eval.chat_url, cfg.prompt_eval.chat_model, *key, cfg.prompt_eval.timeout,
                             cfg.prompt_eval.temperature};
    deme::net::RemoteGenerator gen(chat);
    std::unique_ptr<deme::Embedder> embedder;
    if (cfg.prompt_eval.embed_url.empty()) {
      embedder = std::make_unique<deme::HashingEmbedder>();
    } else {
      embedder = std::make_unique<deme::net::RemoteEmbedder>(deme::net::Endpoint{
          cfg.prompt_eval.embed_url, cfg.prompt_eval.embed_model, *key, cfg.prompt_eval.timeout, 0.0});
    }
    auto remote = deme::prompt::evaluate_rounds(gen, *embedder, scenario, cfg.prompt_eval.rounds);
    deme::net::set_network_allowed(false);
    if (remote.mean_direct() || remote.mean_ours()) {
      table = std::move(remote);
    } else {
      std::string why;
      if (!try_fixtures(fixture_dir, &why)) {
        std::cerr << "deme: remote evaluation failed (" << remote.rows.front().error << ") and no fixtures: " << why
                  << '\n';
        return kRuntime;
      }
      std::cerr << "deme: remote evaluation failed (" << remote.rows.front().error << "); using fixtures\n";
    }
  }
  if (!table) {
    std::string why;
    auto corpus = try_fixtures(fixture_dir, &why);
    if (!corpus) {
      std::cerr << "deme: " << why << '\n';
      return kRuntime;
    }
    deme::prompt::FixtureGenerator gen(prompts, *corpus);
    deme::HashingEmbedder embedder;
    table = deme::prompt::evaluate_rounds(gen, embedder, scenario, cfg.prompt_eval.rounds);
  }

  fs::create_directories(opt.out_dir);
  deme::prompt::write_similarity_csv(*table, fs::path(opt.out_dir) / "similarity.csv");
  auto cell = [](const std::optional<double>& v) { return v ? deme::util::fixed(*v) : std::string("n/a"); };
  std::cout << "mean direct: " << cell(table->mean_direct()) << '\n'
            << "mean ours:   " << cell(table->mean_ours()) << '\n';
  return kOk;
}

void print_block(const std::string& title, const std::string& before, const std::string& after) {
  std::cout << "== " << title << " ==\nbefore:\n" << before << "after:\n" << after << '\n';
}

int cmd_path_demo(const Options&) {
  using namespace deme;
  MethodPath path;
  path.steps = {
      {"sense", "M1", "read road condition and current speed", Origin::Original},
      {"plan", "M2", "choose a throttle level for the preset speed", Origin::Original},
      {"act", "M3", "apply the throttle and engage the brake when idle", Origin::Original},
  };
  const Decoration learned{DecorationKind::Learned, "backup-brake", "use the backup brake system", 1};
  const Decoration goal{DecorationKind::Goal, "goal:brake", "use the backup brake or do not operate", 0};

  const DecoratedInput input{"How to operate this IoT device on rainy or snowy days? The brake is broken.", {}};
  print_block("pre-decoration", render_prompt(input) + "\n", render_prompt(apply_pre(input, goal)) + "\n");
  print_block("post-decoration", to_text(path), to_text(apply_post(path, learned, appending_rewriter)));
  print_block("intermediate-step modification", to_text(path), to_text(modify_step(path, 1, learned, appending_rewriter)));
  const Step check{"check", "N", "verify the brake is available; otherwise stop", Origin::Inserted};
  print_block("step insertion", to_text(path), to_text(insert_step(path, 0, check)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deme - method decoration experiments"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config file (TOML)");
    sub->add_option("--seed", opt.seed, "base seed; episode i uses seed + i");
    sub->add_option("--episodes", opt.episodes, "HVAC episodes per controller");
    sub->add_option("--rounds", opt.rounds, "prompt-eval rounds");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    auto* offline = sub->add_flag("--offline", "no network access (default)");
    auto* remote = sub->add_flag("--remote", opt.remote, "use the configured remote endpoints");
    offline->excludes(remote);
    sub->add_option("--jobs", opt.jobs, "parallel episodes")->capture_default_str();
  };

  auto* hvac = app.add_subcommand("hvac", "run the paired baseline vs decorated HVAC experiment");
  add_common(hvac);
  hvac->add_flag("--traces", opt.traces, "also write per-episode trace CSVs");
  auto* prompt_eval = app.add_subcommand("prompt-eval", "score direct vs decorated prompts against the reference");
  add_common(prompt_eval);
  prompt_eval->add_option("--fixtures", opt.fixtures, "fixture corpus directory (direct/, ours/)");
  auto* demo = app.add_subcommand("path-demo", "show the four decoration operators on a sample path");
  add_common(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (hvac->parsed()) return cmd_hvac(opt);
    if (prompt_eval->parsed()) return cmd_prompt_eval(opt);
    if (demo->parsed()) return cmd_path_demo(opt);
  } catch (const UsageError& e) {
    std::cerr << "deme: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "deme: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
