#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mose/moe.hpp"

namespace mose {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epoch = 0;
  std::vector<std::pair<std::string, std::string>> config;  ///< run config echo
};

struct Checkpoint {
  MoseModel model;
  CheckpointMeta meta;
};

/// Text record: "MOSE-CHECKPOINT 1", seed, epoch, config echo, model
/// configuration, then every tensor by name with %.17g values.
void write_checkpoint(const std::filesystem::path& path, const MoseModel& model, const CheckpointMeta& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mose
