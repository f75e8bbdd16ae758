#ifndef RASGG_CHECKPOINT_HPP_
#define RASGG_CHECKPOINT_HPP_

#include "rasgg/encoder.hpp"
#include "rasgg/hash.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace rasgg {

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error("checkpoint", what) {}
};

struct Checkpoint {
  ModelParameters<double> params;
  std::string vocab_hash;   // hex SHA-256 of Vocabulary::canonical_json()
  std::string config_hash;  // hex SHA-256 of the run configuration
  std::string model_hash;   // hex SHA-256 of the tensors, see model_hash()
};

/// Content hash over the model dimensions and every tensor's raw bytes.
Digest model_hash(const ModelParameters<double>& params);

std::string fusion_name(FusionKind f);
FusionKind parse_fusion(const std::string& name);

/// JSON container: {"format","version","vocab_hash","config_hash",
/// "model_hash","config":{...},"tensors":{name:{"shape":[r,c],"data":[...]}}}.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Rejects files whose stored model hash does not match their tensors, and
/// files whose vocabulary hash differs from `expected_vocab_hash` when given.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_vocab_hash = std::nullopt);

}  // namespace rasgg

#endif  // RASGG_CHECKPOINT_HPP_
