// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/demogen/dataset.hpp"

#include "navloop/binio.hpp"

namespace navloop::demogen {

namespace {
constexpr char kMagic[4] = {'N', 'A', 'V', 'D'};
constexpr std::size_t kStepBytes = (sim::kObsDim + 2) * sizeof(float);
}  // namespace

std::size_t DemoDataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

DemoDataset clean_dataset(const DemoDataset& ds, CleanReport* report) {
  CleanReport r;
  DemoDataset out;
  for (const auto& t : ds.trajectories) {
    if (t.event != sim::Event::kReached) {
      ++r.dropped_not_reached;
    } else if (t.steps.size() < kMinTrajectorySteps) {
      ++r.dropped_too_short;
    } else {
      out.trajectories.push_back(t);
    }
  }
  r.kept = out.trajectories.size();
  if (report) *report = r;
  return out;
}

std::vector<std::uint8_t> encode_dataset(const DemoDataset& ds) {
  binio::Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.trajectories.size()));
  for (const auto& t : ds.trajectories) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.scene.size()));
    w.put_bytes(t.scene);
    w.put<std::uint64_t>(t.seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.steps.size()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.event));
    for (const auto& s : t.steps) {
      for (float x : s.obs) w.put<float>(x);
      w.put<float>(s.v);
      w.put<float>(s.w);
    }
  }
  return w.bytes();
}

DemoDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  binio::Reader r(bytes);
  if (r.get_string(4, "magic") != std::string_view(kMagic, 4)) {
    throw ParseError("not a demonstration dataset (bad magic)", 0);
  }
  const auto version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kDatasetVersion) {
    throw ParseError("unsupported dataset version " + std::to_string(version), version_at);
  }
  const auto count = r.get<std::uint32_t>("trajectory count");
  DemoDataset ds;
  for (std::uint32_t i = 0; i < count; ++i) {
    TrajectoryRecord t;
    const auto name_len = r.get<std::uint32_t>("scene name length");
    t.scene = r.get_string(name_len, "scene name");
    t.seed = r.get<std::uint64_t>("seed");
    const auto steps = r.get<std::uint32_t>("step count");
    const auto event_at = r.offset();
    const auto event = r.get<std::uint8_t>("event");
    if (event > static_cast<std::uint8_t>(sim::Event::kTimeout)) {
      throw ParseError("invalid event code " + std::to_string(event), event_at);
    }
    t.event = static_cast<sim::Event>(event);
    if (static_cast<std::uint64_t>(steps) * kStepBytes > r.remaining()) {
      throw ParseError("truncated steps for trajectory " + std::to_string(i), r.offset());
    }
    t.steps.resize(steps);
    for (auto& s : t.steps) {
      for (float& x : s.obs) x = r.get<float>("observation");
      s.v = r.get<float>("action");
      s.w = r.get<float>("action");
    }
    ds.trajectories.push_back(std::move(t));
  }
  if (!r.at_end()) throw ParseError("trailing bytes after last trajectory", r.offset());
  return ds;
}

void write_dataset(const DemoDataset& ds, const std::filesystem::path& path) {
  binio::write_file(path, encode_dataset(ds));
}

DemoDataset read_dataset(const std::filesystem::path& path) {
  return decode_dataset(binio::read_file(path));
}

std::uint64_t dataset_checksum(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace navloop::demogen
