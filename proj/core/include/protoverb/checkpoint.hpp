#pragma once

// Trained-verbalizer checkpoints, stored as NDJSON:
//
//   line 1      header: {"kind":"protoverb_checkpoint","format_version":1,"dim":D,"prototype_dim":d,
//                        "class_names":[...],"variant":"full","seed":s,"steps":T,"learning_rate":lr,...}
//   next d      {"w_row":r,"values":[...D...]}
//   next N      {"prototype":n,"class":"name","values":[...d...]}
//   remainder   {"step":t,"l_ins":x,"l_proto":y,"total":z}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "protoverb/episode.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/trainer.hpp"

namespace protoverb {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  LossVariant variant = LossVariant::kFull;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  double learning_rate = kDefaultLearningRate;
  std::string template_id;
  std::string model_id;
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::uint64_t episode_seed = 0;
  NoiseSpec noise;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  CheckpointMeta meta;
  TrainResult result;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws DataError (with line number) on malformed content.
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace protoverb
