#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cntpp/core/errors.hpp"

namespace cntpp {

enum class EventKind { engagement, generation };

inline const char* to_string(EventKind k) {
  return k == EventKind::engagement ? "engagement" : "generation";
}

inline EventKind event_kind_from_string(const std::string& s) {
  if (s == "engagement") return EventKind::engagement;
  if (s == "generation") return EventKind::generation;
  throw DataError("unknown event kind: " + s);
}

// A timestamped event carrying a feature vector. Engagement events reference
// the news item they engaged with; generation events do not.
struct MarkedEvent {
  EventKind kind = EventKind::generation;
  double t = 0.0;
  std::vector<double> feature;
  std::optional<std::int64_t> news_id;

  static MarkedEvent engagement(double t, std::vector<double> feature,
                                std::int64_t news_id) {
    return MarkedEvent{EventKind::engagement, t, std::move(feature), news_id};
  }
  static MarkedEvent generation(double t, std::vector<double> feature) {
    return MarkedEvent{EventKind::generation, t, std::move(feature),
                       std::nullopt};
  }
};

// One user's merged timeline, strictly increasing in t.
struct EventSequence {
  std::int64_t user_id = 0;
  std::vector<MarkedEvent> events;
};

// Checks the type invariants; throws DataError on the first violation.
// d_f < 0 skips the feature-dimension check.
inline void validate_sequence(const EventSequence& seq, int d_f = -1) {
  double prev_t = -1.0;
  bool first = true;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const MarkedEvent& e = seq.events[i];
    const std::string where =
        "user " + std::to_string(seq.user_id) + " event " + std::to_string(i);
    if (!(e.t >= 0.0)) throw DataError(where + ": negative timestamp");
    if (!first && !(e.t > prev_t))
      throw DataError(where + ": timestamps not strictly increasing");
    if (d_f >= 0 && static_cast<int>(e.feature.size()) != d_f)
      throw DataError(where + ": feature dimension " +
                      std::to_string(e.feature.size()) + " != " +
                      std::to_string(d_f));
    const bool is_eng = e.kind == EventKind::engagement;
    if (is_eng != e.news_id.has_value())
      throw DataError(where + ": news_id must be present exactly for "
                              "engagement events");
    prev_t = e.t;
    first = false;
  }
}

}  // namespace cntpp
