#include "rasgg/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace rasgg {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "rasgg-checkpoint";
constexpr int kVersion = 1;

void put_u64(Sha256& h, std::uint64_t v) {
  std::array<std::uint8_t, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  h.update(b);
}

json config_to_json(const ModelConfig& c) {
  return json{{"feature_dim", c.feature_dim},   {"embed_dim", c.embed_dim},
              {"word_dim", c.word_dim},         {"proj_hidden", c.proj_hidden},
              {"proj_out", c.proj_out},         {"feat_aug_hidden", c.feat_aug_hidden},
              {"n_entities", c.n_entities},     {"n_predicates", c.n_predicates},
              {"fusion", fusion_name(c.fusion)}, {"embed_init_std", c.embed_init_std},
              {"gamma_init", c.gamma_init}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<Eigen::Index>();
  c.embed_dim = j.at("embed_dim").get<Eigen::Index>();
  c.word_dim = j.at("word_dim").get<Eigen::Index>();
  c.proj_hidden = j.at("proj_hidden").get<Eigen::Index>();
  c.proj_out = j.at("proj_out").get<Eigen::Index>();
  c.feat_aug_hidden = j.at("feat_aug_hidden").get<Eigen::Index>();
  c.n_entities = j.at("n_entities").get<Eigen::Index>();
  c.n_predicates = j.at("n_predicates").get<Eigen::Index>();
  c.fusion = parse_fusion(j.at("fusion").get<std::string>());
  c.embed_init_std = j.at("embed_init_std").get<double>();
  c.gamma_init = j.at("gamma_init").get<double>();
  return c;
}

}  // namespace

std::string fusion_name(FusionKind f) {
  return f == FusionKind::kElementwise ? "elementwise" : "concat";
}

FusionKind parse_fusion(const std::string& name) {
  if (name == "elementwise") return FusionKind::kElementwise;
  if (name == "concat") return FusionKind::kConcat;
  throw ModelError("unknown fusion '" + name + "'");
}

Digest model_hash(const ModelParameters<double>& params) {
  Sha256 h;
  h.update(config_to_json(params.config).dump());
  params.visit([&](std::string_view name, const auto& t) {
    h.update(name);
    put_u64(h, static_cast<std::uint64_t>(t.rows()));
    put_u64(h, static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      put_u64(h, std::bit_cast<std::uint64_t>(t.data()[i]));
    }
  });
  return h.finish();
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json tensors = json::object();
  ckpt.params.visit([&](std::string_view name, const auto& t) {
    json entry;
    entry["shape"] = {t.rows(), t.cols()};
    // column-major storage order
    entry["data"] = std::vector<double>(t.data(), t.data() + t.size());
    tensors[std::string(name)] = std::move(entry);
  });
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["vocab_hash"] = ckpt.vocab_hash;
  j["config_hash"] = ckpt.config_hash;
  j["model_hash"] = to_hex(model_hash(ckpt.params));
  j["config"] = config_to_json(ckpt.params.config);
  j["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  Checkpoint ck;
  try {
    json j;
    in >> j;
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
      throw CheckpointError(path.string() + ": unsupported checkpoint format");
    }
    ck.vocab_hash = j.at("vocab_hash").get<std::string>();
    ck.config_hash = j.at("config_hash").get<std::string>();
    ck.params = ModelParameters<double>::zeros(config_from_json(j.at("config")));
    const json& tensors = j.at("tensors");
    ck.params.visit([&](std::string_view name, auto& t) {
      const json& e = tensors.at(std::string(name));
      const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = e.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Eigen::Index>(data.size()) ||
          shape[0] != t.rows() || shape[1] != t.cols()) {
        throw CheckpointError(path.string() + ": tensor '" + std::string(name) +
                              "' has the wrong shape");
      }
      std::memcpy(t.data(), data.data(), data.size() * sizeof(double));
    });
    ck.model_hash = to_hex(model_hash(ck.params));
    if (ck.model_hash != j.at("model_hash").get<std::string>()) {
      throw CheckpointError(path.string() + ": model hash mismatch (corrupted checkpoint)");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed checkpoint: " + e.what());
  }
  if (expected_vocab_hash && *expected_vocab_hash != ck.vocab_hash) {
    throw CheckpointError(path.string() + ": vocabulary hash mismatch");
  }
  return ck;
}

}  // namespace rasgg
