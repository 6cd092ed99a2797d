// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Demonstration corpus and its binary file format:
//
//   "NAVD" | u32 version | u32 trajectory count
//   per trajectory: u32 name length | name bytes | u64 seed | u32 steps | u8 event
//                   steps x (184 f32 observation | f32 v | f32 w)
//
// All integers and floats little-endian.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "navloop/sim/world.hpp"

namespace navloop::demogen {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kMinTrajectorySteps = 20;

struct DemoStep {
  std::array<float, sim::kObsDim> obs{};
  float v = 0.0f;
  float w = 0.0f;

  friend bool operator==(const DemoStep&, const DemoStep&) = default;
};

struct TrajectoryRecord {
  std::string scene;
  std::uint64_t seed = 0;
  std::vector<DemoStep> steps;
  sim::Event event = sim::Event::kAlive;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

struct DemoDataset {
  std::vector<TrajectoryRecord> trajectories;

  std::size_t total_steps() const;
  friend bool operator==(const DemoDataset&, const DemoDataset&) = default;
};

struct CleanReport {
  std::size_t kept = 0;
  std::size_t dropped_not_reached = 0;
  std::size_t dropped_too_short = 0;
};

/// Keeps trajectories that reached the goal in at least 20 steps.
DemoDataset clean_dataset(const DemoDataset& ds, CleanReport* report = nullptr);

std::vector<std::uint8_t> encode_dataset(const DemoDataset& ds);
/// Throws ParseError (with byte offset) on bad magic, version, event code or
/// truncation.
DemoDataset decode_dataset(const std::vector<std::uint8_t>& bytes);

void write_dataset(const DemoDataset& ds, const std::filesystem::path& path);
DemoDataset read_dataset(const std::filesystem::path& path);

/// FNV-1a 64 over the encoded bytes.
std::uint64_t dataset_checksum(const std::vector<std::uint8_t>& bytes);

}  // namespace navloop::demogen
