#ifndef XTASNET_CHECKPOINT_HPP
#define XTASNET_CHECKPOINT_HPP

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "xtasnet/common.hpp"

namespace xtasnet {

// Checkpoints are a directory of per-tensor raw float32 little-endian
// files plus descriptor.json carrying names, shapes, dtypes, layer kinds
// and arbitrary metadata.
struct CheckpointTensor {
  std::string name;
  std::string kind;
  const MatrixX<float>* data = nullptr;
};

void save_checkpoint(const std::string& dir, const std::string& tag,
                     const std::vector<CheckpointTensor>& tensors,
                     const nlohmann::json& meta);

struct LoadedCheckpoint {
  std::string tag;
  nlohmann::json meta;
  std::map<std::string, MatrixX<float>> tensors;
};

LoadedCheckpoint load_checkpoint(const std::string& dir);

// Copies a named tensor into dst; shape must match exactly.
void assign_tensor(const LoadedCheckpoint& ckpt, const std::string& name,
                   MatrixX<float>& dst);

}  // namespace xtasnet

#endif  // XTASNET_CHECKPOINT_HPP
