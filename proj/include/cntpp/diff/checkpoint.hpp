#pragma once

#include <string>

#include <json.hpp>

#include "cntpp/core/errors.hpp"
#include "cntpp/core/textio.hpp"
#include "cntpp/diff/tensor.hpp"

namespace cntpp {

inline constexpr const char* kCheckpointFormat = "cntpp.checkpoint.v1";

// Checkpoints are JSON: format version, a config echo, then each tensor with
// shape, row-major values and Adam state. nlohmann serializes doubles with
// shortest-round-trip precision, so the store survives bit-exactly.
inline std::string serialize_checkpoint(const ParamStore& params,
                                        const nlohmann::ordered_json& config) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["config"] = config;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, t] : params) {
    nlohmann::ordered_json jt;
    jt["shape"] = t.shape;
    jt["data"] = t.data;
    jt["m"] = t.m;
    jt["v"] = t.v;
    jt["step"] = t.step;
    tensors[name] = std::move(jt);
  }
  j["tensors"] = std::move(tensors);
  return j.dump();
}

struct Checkpoint {
  ParamStore params;
  nlohmann::ordered_json config;
};

inline Checkpoint parse_checkpoint(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint: ") + e.what());
  }
  if (!j.contains("format") || j.at("format") != kCheckpointFormat)
    throw VersionError("checkpoint format mismatch, expected " +
                       std::string(kCheckpointFormat));
  Checkpoint ck;
  ck.config = j.value("config", nlohmann::ordered_json::object());
  for (const auto& [name, jt] : j.at("tensors").items()) {
    Tensor& t =
        ck.params.add(name, jt.at("shape").get<std::vector<std::size_t>>());
    t.data = jt.at("data").get<std::vector<double>>();
    t.m = jt.at("m").get<std::vector<double>>();
    t.v = jt.at("v").get<std::vector<double>>();
    t.step = jt.at("step").get<std::int64_t>();
    if (t.data.size() != shape_size(t.shape) || t.m.size() != t.data.size() ||
        t.v.size() != t.data.size())
      throw DataError("checkpoint tensor " + name + " has inconsistent sizes");
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const ParamStore& params,
                            const nlohmann::ordered_json& config) {
  write_text_file(path, serialize_checkpoint(params, config) + "\n");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_text_file(path));
}

}  // namespace cntpp
