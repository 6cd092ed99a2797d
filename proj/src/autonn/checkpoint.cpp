// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/checkpoint.hpp"

#include "navloop/binio.hpp"

namespace navloop::nn {

namespace {
constexpr char kMagic[4] = {'N', 'L', 'N', 'N'};
}

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
  binio::Writer w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    const Tensor& t = params.value(i);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    for (double x : t.values()) w.put<double>(x);
  }
  return w.bytes();
}

ParamSet decode_checkpoint(std::vector<std::uint8_t> bytes) {
  binio::Reader r(std::move(bytes));
  if (r.get_string(4, "magic") != std::string_view(kMagic, 4)) {
    throw ParseError("not a parameter checkpoint (bad magic)", 0);
  }
  const auto version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version),
                     version_at);
  }
  ParamSet params;
  while (!r.at_end()) {
    const auto entry_at = r.offset();
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name = r.get_string(name_len, "parameter name");
    const auto rank = r.get<std::uint32_t>("rank");
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(r.get<std::uint32_t>("extent"));
      count *= shape.back();
    }
    if (count * sizeof(double) > r.remaining()) {
      throw ParseError("truncated values for '" + name + "'", r.offset());
    }
    std::vector<double> data(count);
    for (double& x : data) x = r.get<double>("value");
    try {
      params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), entry_at);
    }
  }
  return params;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  binio::write_file(path, encode_checkpoint(params));
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(binio::read_file(path));
}

}  // namespace navloop::nn
