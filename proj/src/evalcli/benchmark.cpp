// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/evalcli/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "navloop/errors.hpp"

namespace navloop::eval {

namespace {

class ModelController : public Controller {
 public:
  explicit ModelController(const models::Models& m) : m_(&m) {}
  void reset(const sim::World&, const sim::ObsVector& obs) override { history_.reset(obs); }
  sim::ActionCmd act(const sim::World&) override {
    nn::Graph g(false);
    const models::LatentVars p = models::perceive(g, *m_, models::obs_sequence(g, {&history_.window()}));
    const auto a = models::squash(g, *m_, models::decide_raw(g, *m_, p.mu)).value().values();
    return {a[0], a[1]};
  }
  void observe(const sim::ActionCmd&, const sim::ObsVector& obs) override { history_.push(obs); }

 private:
  const models::Models* m_;
  models::ObsHistory history_;
};

class RandomController : public Controller {
 public:
  RandomController(const sim::SimParams& p, std::uint64_t seed)
      : v_(0.0, p.v_max), w_(-p.w_max, p.w_max), rng_(seed) {}
  void reset(const sim::World&, const sim::ObsVector&) override {}
  sim::ActionCmd act(const sim::World&) override { return {v_(rng_), w_(rng_)}; }
  void observe(const sim::ActionCmd&, const sim::ObsVector&) override {}

 private:
  std::uniform_real_distribution<double> v_, w_;
  std::mt19937_64 rng_;
};

class IdleController : public Controller {
 public:
  void reset(const sim::World&, const sim::ObsVector&) override {}
  sim::ActionCmd act(const sim::World&) override { return {}; }
  void observe(const sim::ActionCmd&, const sim::ObsVector&) override {}
};

class GoalSeekingController : public Controller {
 public:
  void reset(const sim::World&, const sim::ObsVector&) override {}
  sim::ActionCmd act(const sim::World& world) override {
    const sim::Pose& pose = world.robot();
    const sim::Vec2 d = world.goal() - pose.position();
    const double err = sim::wrap_angle(std::atan2(d.y, d.x) - pose.theta);
    const auto& p = world.params();
    const double w = std::clamp(2.0 * err, -p.w_max, p.w_max);
    return {std::abs(err) < 0.2 ? p.v_max : 0.0, w};
  }
  void observe(const sim::ActionCmd&, const sim::ObsVector&) override {}
};

Outcome outcome_of(sim::Event e) {
  switch (e) {
    case sim::Event::kReached: return Outcome::kSuccess;
    case sim::Event::kCollided: return Outcome::kCollision;
    default: return Outcome::kTimeout;
  }
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers; rethrows the
/// first exception.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void write_number(std::ostream& os, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  os << buf;
}

}  // namespace

ControllerFactory model_policy(const models::Models& m) {
  return [&m](std::uint64_t) { return std::make_unique<ModelController>(m); };
}

ControllerFactory random_policy(const sim::SimParams& params) {
  return [params](std::uint64_t seed) { return std::make_unique<RandomController>(params, seed); };
}

ControllerFactory idle_policy() {
  return [](std::uint64_t) { return std::make_unique<IdleController>(); };
}

ControllerFactory goal_seeking_policy() {
  return [](std::uint64_t) { return std::make_unique<GoalSeekingController>(); };
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kCollision: return "collision";
    case Outcome::kTimeout: return "timeout";
  }
  return "unknown";
}

unsigned worker_count() {
  if (const char* env = std::getenv("NAVLOOP_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

EpisodeResult run_episode(const scenes::SceneSpec& spec, std::uint64_t seed, Controller& controller,
                          const std::function<void(const sim::ActionCmd&, const sim::World&)>& on_step) {
  sim::World world = scenes::build_scene(spec, seed);
  controller.reset(world, world.observe());
  EpisodeResult r;
  r.scenario = spec.name;
  r.seed = seed;
  while (true) {
    const sim::ActionCmd a = controller.act(world);
    const sim::StepOutcome out = sim::step_episode(world, a);
    controller.observe(a, out.obs);
    if (on_step) on_step(a, world);
    if (out.event != sim::Event::kAlive) {
      r.outcome = outcome_of(out.event);
      break;
    }
  }
  r.steps = world.step_count();
  r.path_length = world.path_length();
  if (r.outcome == Outcome::kSuccess) r.arriving_step = r.steps;
  return r;
}

ScenarioReport summarize(const std::string& scenario, const std::vector<EpisodeResult>& episodes) {
  ScenarioReport s;
  s.scenario = scenario;
  s.episodes = episodes.size();
  std::size_t success = 0, collision = 0, timeout = 0;
  double arriving = 0.0;
  for (const auto& e : episodes) {
    switch (e.outcome) {
      case Outcome::kSuccess:
        ++success;
        arriving += *e.arriving_step;
        break;
      case Outcome::kCollision: ++collision; break;
      case Outcome::kTimeout: ++timeout; break;
    }
  }
  if (s.episodes == 0) return s;
  const double n = static_cast<double>(s.episodes);
  s.success_rate = 100.0 * static_cast<double>(success) / n;
  s.collision_rate = 100.0 * static_cast<double>(collision) / n;
  s.timeout_rate = 100.0 * static_cast<double>(timeout) / n;
  if (success) s.arriving_step_mean = arriving / static_cast<double>(success);
  return s;
}

BenchmarkReport run_benchmark(const std::vector<scenes::SceneSpec>& suite, const ControllerFactory& policy,
                              std::size_t episodes, std::uint64_t seed_base, unsigned threads) {
  if (episodes == 0) throw UsageError("episodes must be at least 1");
  if (suite.empty()) throw UsageError("benchmark suite is empty");
  BenchmarkReport report;
  report.episodes.resize(suite.size() * episodes);
  parallel_for(report.episodes.size(), threads ? threads : worker_count(), [&](std::size_t k) {
    const std::size_t s = k / episodes, i = k % episodes;
    const std::uint64_t seed = seed_base + i;
    auto controller = policy(seed);
    report.episodes[k] = run_episode(suite[s], seed, *controller);
    report.episodes[k].episode = i;
  });
  for (std::size_t s = 0; s < suite.size(); ++s) {
    const std::vector<EpisodeResult> part(report.episodes.begin() + s * episodes,
                                          report.episodes.begin() + (s + 1) * episodes);
    report.scenarios.push_back(summarize(suite[s].name, part));
  }
  report.overall = summarize("all", report.episodes);
  return report;
}

std::string metrics_csv_header() {
  return "scenario,episodes,success_rate,arriving_step_mean,collision_rate,timeout_rate";
}

void write_metrics_csv(const BenchmarkReport& report, std::ostream& os) {
  os << metrics_csv_header() << '\n';
  auto row = [&](const ScenarioReport& s) {
    os << s.scenario << ',' << s.episodes << ',';
    write_number(os, s.success_rate);
    os << ',';
    if (s.arriving_step_mean) write_number(os, *s.arriving_step_mean);
    os << ',';
    write_number(os, s.collision_rate);
    os << ',';
    write_number(os, s.timeout_rate);
    os << '\n';
  };
  for (const auto& s : report.scenarios) row(s);
  row(report.overall);
}

void write_episodes_csv(const BenchmarkReport& report, std::ostream& os) {
  os << "scenario,episode,seed,outcome,arriving_step,path_length,steps\n";
  for (const auto& e : report.episodes) {
    os << e.scenario << ',' << e.episode << ',' << e.seed << ',' << outcome_name(e.outcome) << ',';
    if (e.arriving_step) os << *e.arriving_step;
    os << ',';
    write_number(os, e.path_length);
    os << ',' << e.steps << '\n';
  }
}

// Exports -------------------------------------------------------------------

std::vector<LatentRow> export_latents(const models::Models& m, const std::vector<scenes::SceneSpec>& suite,
                                      std::size_t episodes, std::uint64_t seed_base) {
  std::vector<LatentRow> rows;
  for (const auto& spec : suite) {
    for (std::size_t i = 0; i < episodes; ++i) {
      ModelController controller(m);
      models::ActHistory history;
      history.reset();
      int t = 0;
      run_episode(spec, seed_base + i, controller, [&](const sim::ActionCmd& a, const sim::World&) {
        const models::ActWindow window = history.with_head(a);
        history.push(a);
        LatentRow row;
        row.scenario = spec.name;
        row.episode = i;
        row.t = t++;
        row.action = a;
        row.latent = models::reason(m, window).mu;
        rows.push_back(std::move(row));
      });
    }
  }
  return rows;
}

void write_latents_csv(const std::vector<LatentRow>& rows, std::ostream& os) {
  os << "scenario,episode,t,v,w";
  for (std::size_t d = 0; d < models::kLatentDim; ++d) os << ",z" << d;
  os << '\n';
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.episode << ',' << r.t << ',';
    write_number(os, r.action.v);
    os << ',';
    write_number(os, r.action.w);
    for (double z : r.latent) {
      os << ',';
      write_number(os, z);
    }
    os << '\n';
  }
}

ClusterStats latent_cluster_stats(const std::vector<LatentRow>& rows, double threshold) {
  std::vector<const LatentRow*> pos, neg;
  for (const auto& r : rows) {
    if (r.action.w > threshold) pos.push_back(&r);
    if (r.action.w < -threshold) neg.push_back(&r);
  }
  auto dist = [](const LatentRow* a, const LatentRow* b) {
    double s = 0.0;
    for (std::size_t d = 0; d < models::kLatentDim; ++d) s += (a->latent[d] - b->latent[d]) * (a->latent[d] - b->latent[d]);
    return std::sqrt(s);
  };
  ClusterStats out;
  out.positive = pos.size();
  out.negative = neg.size();
  double inter = 0.0, intra = 0.0;
  std::size_t n_inter = 0, n_intra = 0;
  for (const auto* a : pos)
    for (const auto* b : neg) {
      inter += dist(a, b);
      ++n_inter;
    }
  for (const auto* group : {&pos, &neg}) {
    for (std::size_t i = 0; i < group->size(); ++i)
      for (std::size_t j = i + 1; j < group->size(); ++j) {
        intra += dist((*group)[i], (*group)[j]);
        ++n_intra;
      }
  }
  out.inter = n_inter ? inter / static_cast<double>(n_inter) : 0.0;
  out.intra = n_intra ? intra / static_cast<double>(n_intra) : 0.0;
  return out;
}

std::size_t ActionHistogram::bin_of(double v) const {
  const double x = std::clamp(v, 0.0, v_max) / bin_width();
  return std::min(counts.size() - 1, static_cast<std::size_t>(x));
}

std::vector<ActionHistogram> export_action_hist(const ControllerFactory& policy,
                                                const std::vector<scenes::SceneSpec>& suite,
                                                std::size_t episodes, std::size_t bins, double v_max,
                                                std::uint64_t seed_base) {
  if (bins < 2) throw UsageError("histogram needs at least 2 bins");
  std::vector<ActionHistogram> out;
  for (const auto& spec : suite) {
    ActionHistogram h{spec.name, v_max, std::vector<std::uint64_t>(bins, 0)};
    for (std::size_t i = 0; i < episodes; ++i) {
      auto controller = policy(seed_base + i);
      run_episode(spec, seed_base + i, *controller,
                  [&](const sim::ActionCmd& a, const sim::World&) { ++h.counts[h.bin_of(a.v)]; });
    }
    out.push_back(std::move(h));
  }
  return out;
}

void write_action_hist_csv(const std::vector<ActionHistogram>& hists, std::ostream& os) {
  os << "scenario,bin,lo,hi,count\n";
  for (const auto& h : hists) {
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      os << h.scenario << ',' << b << ',';
      write_number(os, h.bin_width() * static_cast<double>(b));
      os << ',';
      write_number(os, b + 1 == h.counts.size() ? h.v_max : h.bin_width() * static_cast<double>(b + 1));
      os << ',' << h.counts[b] << '\n';
    }
  }
}

}  // namespace navloop::eval
