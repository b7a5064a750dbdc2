#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cntpp/core/errors.hpp"
#include "cntpp/core/event.hpp"
#include "cntpp/core/textio.hpp"

namespace cntpp {

inline constexpr const char* kEventsFormat = "cntpp.events.v1";

// Provenance stamped into every artifact file.
struct ArtifactHeader {
  std::string format;
  std::string config_hash;
  std::map<std::string, std::uint64_t> seeds;

  std::string to_json_line() const {
    std::string out = "{\"type\":\"header\",\"format\":\"" + format +
                      "\",\"config_hash\":\"" + config_hash + "\",\"seeds\":{";
    bool first = true;
    for (const auto& [k, v] : seeds) {
      if (!first) out += ',';
      out += '"' + k + "\":" + std::to_string(v);
      first = false;
    }
    out += "}}";
    return out;
  }

  static ArtifactHeader from_json(const nlohmann::json& j) {
    ArtifactHeader h;
    h.format = j.at("format").get<std::string>();
    h.config_hash = j.value("config_hash", "");
    if (j.contains("seeds"))
      for (const auto& [k, v] : j.at("seeds").items())
        h.seeds[k] = v.get<std::uint64_t>();
    return h;
  }
};

// Writers emit fields in the order fixed by the dataset contract:
// user_id, events[] {kind, t, feature[], news_id}.
inline std::string event_sequence_to_json_line(const EventSequence& seq) {
  std::string out = "{\"user_id\":" + std::to_string(seq.user_id) +
                    ",\"events\":[";
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const MarkedEvent& e = seq.events[i];
    if (i) out += ',';
    out += "{\"kind\":\"";
    out += to_string(e.kind);
    out += "\",\"t\":" + format_double(e.t) + ",\"feature\":";
    append_double_array(out, e.feature);
    if (e.news_id) out += ",\"news_id\":" + std::to_string(*e.news_id);
    out += '}';
  }
  out += "]}";
  return out;
}

inline EventSequence event_sequence_from_json(const nlohmann::json& j) {
  EventSequence seq;
  seq.user_id = j.at("user_id").get<std::int64_t>();
  for (const auto& je : j.at("events")) {
    MarkedEvent e;
    e.kind = event_kind_from_string(je.at("kind").get<std::string>());
    e.t = je.at("t").get<double>();
    e.feature = je.at("feature").get<std::vector<double>>();
    if (je.contains("news_id") && !je.at("news_id").is_null())
      e.news_id = je.at("news_id").get<std::int64_t>();
    seq.events.push_back(std::move(e));
  }
  return seq;
}

inline std::string serialize_dataset(const std::vector<EventSequence>& data,
                                     const ArtifactHeader& header) {
  std::string out = header.to_json_line();
  out += '\n';
  for (const auto& seq : data) {
    out += event_sequence_to_json_line(seq);
    out += '\n';
  }
  return out;
}

struct Dataset {
  ArtifactHeader header;
  std::vector<EventSequence> sequences;
};

inline Dataset parse_dataset(const std::string& text, int expect_d_f = -1) {
  Dataset ds;
  bool saw_header = false;
  for (const std::string& line : split_lines(text)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad dataset line: ") + e.what());
    }
    if (j.contains("type") && j.at("type") == "header") {
      ds.header = ArtifactHeader::from_json(j);
      if (ds.header.format != kEventsFormat)
        throw VersionError("dataset format " + ds.header.format +
                           ", expected " + kEventsFormat);
      saw_header = true;
      continue;
    }
    EventSequence seq = event_sequence_from_json(j);
    validate_sequence(seq, expect_d_f);
    ds.sequences.push_back(std::move(seq));
  }
  if (!saw_header && ds.sequences.empty())
    throw DataError("empty dataset file");
  return ds;
}

inline Dataset load_dataset(const std::string& path, int expect_d_f = -1) {
  return parse_dataset(read_text_file(path), expect_d_f);
}

}  // namespace cntpp
