#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cntpp/core/dataset_io.hpp"
#include "cntpp/core/textio.hpp"
#include "cntpp/world/world.hpp"

namespace cntpp {

inline constexpr const char* kTruthFormat = "cntpp.gt.v1";

// Ground-truth file: a header record carrying the world digest, then one
// line per engagement {user_id, engagement_index, news_id, t, delta_u[],
// oracle_ite[] or null}.
inline std::string serialize_ground_truth(const GroundTruth& truth,
                                          const ArtifactHeader& header_base) {
  ArtifactHeader header = header_base;
  header.format = kTruthFormat;
  std::string out = "{\"type\":\"header\",\"format\":\"" + header.format +
                    "\",\"config_hash\":\"" + header.config_hash +
                    "\",\"world_digest\":\"" + truth.world_digest +
                    "\",\"seeds\":{";
  bool first = true;
  for (const auto& [k, v] : header.seeds) {
    if (!first) out += ',';
    out += '"' + k + "\":" + std::to_string(v);
    first = false;
  }
  out += "}}\n";
  for (const EngagementDelta& d : truth.deltas) {
    out += "{\"user_id\":" + std::to_string(d.user_id) +
           ",\"engagement_index\":" + std::to_string(d.engagement_index) +
           ",\"news_id\":" + std::to_string(d.news_id) +
           ",\"t\":" + format_double(d.t) + ",\"delta_u\":";
    append_double_array(out, d.delta_u);
    out += ",\"oracle_ite\":";
    if (d.oracle_ite)
      append_double_array(out, *d.oracle_ite);
    else
      out += "null";
    out += "}\n";
  }
  return out;
}

struct GroundTruthFile {
  std::string world_digest;
  std::string config_hash;
  std::vector<EngagementDelta> deltas;
};

inline GroundTruthFile parse_ground_truth(const std::string& text) {
  GroundTruthFile gt;
  bool saw_header = false;
  for (const std::string& line : split_lines(text)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad ground-truth line: ") + e.what());
    }
    if (j.contains("type") && j.at("type") == "header") {
      if (j.at("format") != kTruthFormat)
        throw VersionError("ground-truth format mismatch");
      gt.world_digest = j.value("world_digest", "");
      gt.config_hash = j.value("config_hash", "");
      saw_header = true;
      continue;
    }
    EngagementDelta d;
    d.user_id = j.at("user_id").get<std::int64_t>();
    d.engagement_index = j.at("engagement_index").get<int>();
    d.news_id = j.at("news_id").get<std::int64_t>();
    d.t = j.at("t").get<double>();
    d.delta_u = j.at("delta_u").get<std::vector<double>>();
    if (j.contains("oracle_ite") && !j.at("oracle_ite").is_null())
      d.oracle_ite = j.at("oracle_ite").get<std::vector<double>>();
    gt.deltas.push_back(std::move(d));
  }
  if (!saw_header) throw DataError("ground-truth file has no header");
  return gt;
}

}  // namespace cntpp
