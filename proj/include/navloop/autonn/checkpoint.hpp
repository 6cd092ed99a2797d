// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "navloop/autonn/params.hpp"

namespace navloop::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: "NLNN", u32 version, then per parameter until end of input:
// u32 name length, UTF-8 name, u32 rank, u32 extents[rank], f64 values.
// Optimizer state is not stored.
std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(std::vector<std::uint8_t> bytes);

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace navloop::nn
