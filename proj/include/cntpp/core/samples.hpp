#pragma once

#include <optional>
#include <vector>

#include "cntpp/core/event.hpp"

namespace cntpp {

// Outcome sample: a generation event (Y), the engagement immediately before
// it if there is one (Tr), and everything earlier (X).
struct TrainingSample {
  MarkedEvent outcome;
  std::optional<MarkedEvent> treatment;
  EventSequence covariates;

  // Timestamp of the last conditioning event; the elapsed time fed to the
  // intensity heads is outcome.t minus this.
  double conditioning_time() const {
    if (treatment) return treatment->t;
    return covariates.events.back().t;
  }
};

// Target pair for the treatment predictor: an engagement event and all
// events before it.
struct TreatmentSample {
  MarkedEvent target;
  EventSequence covariates;

  double conditioning_time() const { return covariates.events.back().t; }
};

// One sample per generation event that has at least one predecessor.
// If the immediate predecessor is an engagement event it becomes the
// treatment and the covariates stop before it; otherwise there is no
// treatment and the covariates run up to the outcome.
inline std::vector<TrainingSample> build_outcome_samples(
    const EventSequence& seq) {
  std::vector<TrainingSample> out;
  for (std::size_t i = 1; i < seq.events.size(); ++i) {
    const MarkedEvent& y = seq.events[i];
    if (y.kind != EventKind::generation) continue;
    const MarkedEvent& prev = seq.events[i - 1];
    TrainingSample s;
    s.outcome = y;
    s.covariates.user_id = seq.user_id;
    if (prev.kind == EventKind::engagement) {
      s.treatment = prev;
      s.covariates.events.assign(seq.events.begin(),
                                 seq.events.begin() + (i - 1));
    } else {
      s.covariates.events.assign(seq.events.begin(), seq.events.begin() + i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// One pair per engagement event with at least one predecessor.
inline std::vector<TreatmentSample> build_treatment_samples(
    const EventSequence& seq) {
  std::vector<TreatmentSample> out;
  for (std::size_t i = 1; i < seq.events.size(); ++i) {
    const MarkedEvent& e = seq.events[i];
    if (e.kind != EventKind::engagement) continue;
    TreatmentSample s;
    s.target = e;
    s.covariates.user_id = seq.user_id;
    s.covariates.events.assign(seq.events.begin(), seq.events.begin() + i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cntpp
