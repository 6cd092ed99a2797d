// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/evalcli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "navloop/demogen/corpus.hpp"
#include "navloop/errors.hpp"
#include "navloop/evalcli/benchmark.hpp"
#include "navloop/seeding.hpp"
#include "navloop/training/config.hpp"
#include "navloop/training/stage1.hpp"
#include "navloop/training/stage2.hpp"

namespace navloop::eval {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  // Subcommand options.
  std::string suite;
  std::string data;
  std::string checkpoints;
  std::string policy = "model";
  std::size_t target = 200;
  std::size_t episodes = 400;
  std::size_t bins = 50;
  unsigned threads = 0;
  bool no_reasoning = false;
  bool no_stage1 = false;
  bool no_drw = false;
};

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  return demogen::dataset_checksum(std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

training::TrainConfig load_config(const Options& o) {
  training::TrainConfig c = o.config_path.empty() ? training::TrainConfig{}
                                                  : training::parse_train_config(read_text(o.config_path));
  if (o.seed) c.seed = *o.seed;
  if (o.no_reasoning) c.use_reasoning = false;
  if (o.no_stage1) c.use_stage1 = false;
  if (o.no_drw) c.use_drw = false;
  training::validate(c);
  return c;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    const training::TrainConfig& cfg, const json& outputs, const json& results) {
  const json config = json::parse(training::train_config_to_json(cfg));
  json m;
  m["tool"] = "navloop";
  m["version"] = NAVLOOP_VERSION;
  m["command"] = command;
  m["args"] = args;
  m["seed"] = cfg.seed;
  m["config"] = config;
  m["config_hash"] = hex64(fnv1a(config.dump()));
  m["outputs"] = outputs;
  m["results"] = results;
  open_output(dir / "manifest.json") << m.dump(2) << '\n';
}

json report_json(const ScenarioReport& s) {
  json j;
  j["episodes"] = s.episodes;
  j["success_rate"] = s.success_rate;
  j["collision_rate"] = s.collision_rate;
  j["timeout_rate"] = s.timeout_rate;
  j["arriving_step_mean"] = s.arriving_step_mean ? json(*s.arriving_step_mean) : json(nullptr);
  return j;
}

models::Models load_checkpoints(const Options& o) {
  if (o.checkpoints.empty()) throw UsageError("--checkpoints is required");
  return models::load_models(o.checkpoints);
}

// Subcommands ---------------------------------------------------------------

json cmd_gen_data(const Options& o, const training::TrainConfig& cfg, const fs::path& out, std::ostream& os,
                  json& outputs) {
  demogen::CorpusConfig cc;
  cc.scenes = resolve_suite(o.suite.empty() ? "training" : o.suite);
  cc.target = o.target;
  cc.seed = cfg.seed;
  demogen::GenerationReport rep;
  demogen::CleanReport clean;
  const demogen::DemoDataset ds = demogen::clean_dataset(demogen::generate_demo_corpus(cc, &rep), &clean);
  const std::vector<std::uint8_t> bytes = demogen::encode_dataset(ds);
  demogen::write_dataset(ds, out / "demos.navd");
  outputs.push_back("demos.navd");
  os << "generated " << ds.trajectories.size() << " trajectories (" << ds.total_steps() << " steps) in "
     << rep.attempts << " attempts\n";
  json failures = json::object();
  for (const auto& [cause, n] : rep.failures) failures[cause] = n;
  return {{"trajectories", ds.trajectories.size()}, {"steps", ds.total_steps()}, {"attempts", rep.attempts},
          {"failures", failures}, {"mean_steps", rep.mean_steps}, {"checksum", hex64(demogen::dataset_checksum(bytes))}};
}

json cmd_train_demo(const Options& o, const training::TrainConfig& cfg, const fs::path& out, std::ostream& os,
                    json& outputs) {
  if (o.data.empty()) throw UsageError("--data is required");
  const demogen::DemoDataset ds = demogen::read_dataset(o.data);
  models::Models m = models::init_models({}, derive_seed(cfg.seed, 0x1417));
  std::ofstream log = open_output(out / "stage1_log.csv");
  log << "iter,l1,l2,l3,total\n";
  const auto rep = training::run_stage1(m, ds, cfg, [&](int it, const training::DemoLosses& l) {
    log << it << ',' << l.l1 << ',' << l.l2 << ',' << l.l3 << ',' << l.total << '\n';
    if ((it + 1) % 100 == 0) os << "iter " << it + 1 << " loss " << l.total << '\n' << std::flush;
  });
  models::save_models(m, out / "checkpoints");
  outputs.push_back("stage1_log.csv");
  outputs.push_back("checkpoints");
  os << "held-out action MSE " << rep.holdout_mse_before << " -> " << rep.holdout_mse_after << '\n';
  return {{"holdout_mse_before", rep.holdout_mse_before}, {"holdout_mse_after", rep.holdout_mse_after}};
}

json cmd_train_rl(const Options& o, const training::TrainConfig& cfg, const fs::path& out, std::ostream& os,
                  json& outputs) {
  models::Models m;
  if (cfg.use_stage1) {
    m = load_checkpoints(o);
    models::init_value(m, derive_seed(cfg.seed, 0x7A1));
  } else {
    m = models::init_models({}, derive_seed(cfg.seed, 0x1417));
  }
  const auto suite = resolve_suite(o.suite.empty() ? "training" : o.suite);
  const auto res = training::run_stage2(m, suite, cfg, out, [&](const training::Stage2Row& r) {
    os << "iter " << r.iter << " success " << r.success_rate << " return " << r.mean_return << '\n' << std::flush;
  });
  outputs.push_back("train_log.csv");
  outputs.push_back("checkpoints");
  return {{"iterations", res.rows.size()}, {"reasoning_updates", res.reasoning_updates}};
}

json cmd_eval(const Options& o, const training::TrainConfig& cfg, const fs::path& out, std::ostream& os,
              json& outputs) {
  std::optional<models::Models> m;
  ControllerFactory policy;
  if (o.policy == "model") {
    m = load_checkpoints(o);
    policy = model_policy(*m);
  } else if (o.policy == "random") {
    policy = random_policy();
  } else if (o.policy == "idle") {
    policy = idle_policy();
  } else {
    throw UsageError("unknown policy '" + o.policy + "'");
  }
  const auto suite = resolve_suite(o.suite.empty() ? "few-shot" : o.suite);
  const BenchmarkReport report = run_benchmark(suite, policy, o.episodes, cfg.seed, o.threads);
  {
    std::ofstream f = open_output(out / "metrics.csv");
    write_metrics_csv(report, f);
  }
  {
    std::ofstream f = open_output(out / "episodes.csv");
    write_episodes_csv(report, f);
  }
  write_metrics_csv(report, os);
  outputs.push_back("metrics.csv");
  outputs.push_back("episodes.csv");
  json scen = json::object();
  for (const auto& s : report.scenarios) scen[s.scenario] = report_json(s);
  return {{"overall", report_json(report.overall)}, {"scenarios", scen}};
}

json cmd_export_latents(const Options& o, const training::TrainConfig& cfg, const fs::path& out,
                        std::ostream& os, json& outputs) {
  const models::Models m = load_checkpoints(o);
  const auto rows = export_latents(m, resolve_suite(o.suite.empty() ? "few-shot" : o.suite), o.episodes, cfg.seed);
  std::ofstream f = open_output(out / "latents.csv");
  write_latents_csv(rows, f);
  outputs.push_back("latents.csv");
  const ClusterStats c = latent_cluster_stats(rows);
  os << "wrote " << rows.size() << " rows; turning groups " << c.positive << "/" << c.negative
     << " inter " << c.inter << " intra " << c.intra << '\n';
  return {{"rows", rows.size()}, {"inter", c.inter}, {"intra", c.intra}};
}

json cmd_export_hist(const Options& o, const training::TrainConfig& cfg, const fs::path& out, std::ostream& os,
                     json& outputs) {
  const models::Models m = load_checkpoints(o);
  const auto hists = export_action_hist(model_policy(m), resolve_suite(o.suite.empty() ? "few-shot" : o.suite),
                                        o.episodes, o.bins, m.config.v_max, cfg.seed);
  std::ofstream f = open_output(out / "action_hist.csv");
  write_action_hist_csv(hists, f);
  outputs.push_back("action_hist.csv");
  std::uint64_t total = 0;
  for (const auto& h : hists)
    for (auto c : h.counts) total += c;
  os << "wrote " << hists.size() << " histograms over " << total << " steps\n";
  return {{"steps", total}};
}

json cmd_inspect_data(const Options& o, std::ostream& os) {
  if (o.data.empty()) throw UsageError("--data is required");
  const demogen::DemoDataset ds = demogen::read_dataset(o.data);
  std::map<std::string, std::size_t> events, scenes;
  for (const auto& t : ds.trajectories) {
    ++events[std::string(sim::event_name(t.event))];
    ++scenes[t.scene];
  }
  const std::vector<std::uint8_t> bytes = demogen::encode_dataset(ds);
  json j{{"trajectories", ds.trajectories.size()}, {"steps", ds.total_steps()}, {"events", events},
         {"scenes", scenes}, {"checksum", hex64(demogen::dataset_checksum(bytes))}};
  os << j.dump(2) << '\n';
  return j;
}

}  // namespace

std::vector<scenes::SceneSpec> resolve_suite(const std::string& name_or_path) {
  for (const auto& n : scenes::suite_names()) {
    if (n == name_or_path) return scenes::load_suite(n);
  }
  if (fs::is_regular_file(name_or_path)) return {scenes::load_scene(name_or_path)};
  std::string names;
  for (const auto& n : scenes::suite_names()) names += (names.empty() ? "" : ", ") + n;
  throw UsageError("unknown suite '" + name_or_path + "' (expected one of " + names + " or a scene file)");
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"navloop"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage learned navigation: demonstrations, interaction training, evaluation", "navloop"};
  app.fallthrough();
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON file with training configuration fields");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--out", o.out, "Output directory (default runs/<subcommand>)");

  auto* gen = app.add_subcommand("gen-data", "Generate a demonstration corpus with the A* expert");
  gen->add_option("--suite", o.suite, "Scene suite or scene file (default training)");
  gen->add_option("--target", o.target, "Number of clean trajectories")->check(CLI::PositiveNumber);

  auto* demo = app.add_subcommand("train-demo", "Stage 1: learn from demonstrations");
  demo->add_option("--data", o.data, "Demonstration dataset (.navd)")->required();

  auto* rl = app.add_subcommand("train-rl", "Stage 2: interaction learning with PPO");
  rl->add_option("--checkpoints", o.checkpoints, "Stage-1 checkpoint directory");
  rl->add_option("--suite", o.suite, "Scene suite or scene file (default training)");
  rl->add_flag("--no-reasoning", o.no_reasoning, "Drop the reasoning model and its similarity reward");
  rl->add_flag("--no-stage1", o.no_stage1, "Start from freshly initialized models");
  rl->add_flag("--no-drw", o.no_drw, "Use unit weights in the reasoning update");

  auto* ev = app.add_subcommand("eval", "Benchmark a policy on a scene suite");
  ev->add_option("--checkpoints", o.checkpoints, "Checkpoint directory (model policy)");
  ev->add_option("--suite", o.suite, "Scene suite or scene file (default few-shot)");
  ev->add_option("--episodes", o.episodes, "Episodes per scenario")->check(CLI::PositiveNumber);
  ev->add_option("--policy", o.policy, "model, random or idle")->check(CLI::IsMember({"model", "random", "idle"}));
  ev->add_option("--threads", o.threads, "Worker threads (default NAVLOOP_THREADS or all cores)");

  auto* lat = app.add_subcommand("export-latents", "Write per-step reasoning latents");
  lat->add_option("--checkpoints", o.checkpoints, "Checkpoint directory")->required();
  lat->add_option("--suite", o.suite, "Scene suite or scene file (default few-shot)");
  lat->add_option("--episodes", o.episodes, "Episodes per scenario")->check(CLI::PositiveNumber);

  auto* hist = app.add_subcommand("export-hist", "Write linear-velocity histograms");
  hist->add_option("--checkpoints", o.checkpoints, "Checkpoint directory")->required();
  hist->add_option("--suite", o.suite, "Scene suite or scene file (default few-shot)");
  hist->add_option("--episodes", o.episodes, "Episodes per scenario")->check(CLI::PositiveNumber);
  hist->add_option("--bins", o.bins, "Histogram bins over [0, v_max]")->check(CLI::Range(2, 100000));

  auto* inspect = app.add_subcommand("inspect-data", "Summarize a demonstration dataset");
  inspect->add_option("--data", o.data, "Demonstration dataset (.navd)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const training::TrainConfig cfg = load_config(o);
    if (command == "inspect-data") {
      const json results = cmd_inspect_data(o, out);
      if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_manifest(o.out, command, args, cfg, json::array(), results);
      }
      return kExitOk;
    }
    const fs::path dir = o.out.empty() ? fs::path("runs") / command : fs::path(o.out);
    fs::create_directories(dir);
    json outputs = json::array();
    json results;
    if (command == "gen-data") results = cmd_gen_data(o, cfg, dir, out, outputs);
    else if (command == "train-demo") results = cmd_train_demo(o, cfg, dir, out, outputs);
    else if (command == "train-rl") results = cmd_train_rl(o, cfg, dir, out, outputs);
    else if (command == "eval") results = cmd_eval(o, cfg, dir, out, outputs);
    else if (command == "export-latents") results = cmd_export_latents(o, cfg, dir, out, outputs);
    else if (command == "export-hist") results = cmd_export_hist(o, cfg, dir, out, outputs);
    write_manifest(dir, command, args, cfg, outputs, results);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace navloop::eval
