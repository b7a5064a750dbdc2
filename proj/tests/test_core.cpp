#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "cntpp/core/dataset_io.hpp"
#include "cntpp/core/event.hpp"
#include "cntpp/core/quadrature.hpp"
#include "cntpp/core/rng.hpp"
#include "cntpp/core/samples.hpp"
#include "cntpp/core/thinning.hpp"

using namespace cntpp;

namespace {

MarkedEvent eng(double t, std::int64_t news = 0) {
  return MarkedEvent::engagement(t, {t, -t}, news);
}
MarkedEvent gen(double t) { return MarkedEvent::generation(t, {t, -t}); }

EventSequence seq_of(std::vector<MarkedEvent> events, std::int64_t uid = 7) {
  EventSequence s;
  s.user_id = uid;
  s.events = std::move(events);
  return s;
}

// Random mixed sequence for property tests.
EventSequence random_sequence(RngStream& rng, int n) {
  EventSequence s;
  s.user_id = 1;
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += rng.exponential(1.0);
    if (rng.uniform() < 0.5)
      s.events.push_back(eng(t, static_cast<std::int64_t>(rng.uniform_int(5))));
    else
      s.events.push_back(gen(t));
  }
  return s;
}

}  // namespace

TEST_CASE("rng streams are deterministic and key-separated") {
  auto a = RngStream::derive(42, "x", {1, 2});
  auto b = RngStream::derive(42, "x", {1, 2});
  auto c = RngStream::derive(42, "x", {1, 3});
  auto d = RngStream::derive(42, "y", {1, 2});
  for (int i = 0; i < 16; ++i) REQUIRE(a.next_u64() == b.next_u64());
  REQUIRE(a.next_u64() != c.next_u64());
  REQUIRE(RngStream::derive(42, "x", {1, 2}).next_u64() != d.next_u64());
}

TEST_CASE("rng normal moments") {
  RngStream rng(123);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  REQUIRE(std::abs(s / n) < 0.01);
  REQUIRE(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("validate_sequence catches violations") {
  REQUIRE_NOTHROW(validate_sequence(seq_of({eng(1), gen(2)}), 2));
  REQUIRE_THROWS_AS(validate_sequence(seq_of({gen(2), gen(2)})), DataError);
  REQUIRE_THROWS_AS(validate_sequence(seq_of({gen(3), gen(2)})), DataError);
  auto bad_dim = seq_of({gen(1)});
  REQUIRE_THROWS_AS(validate_sequence(bad_dim, 3), DataError);
  auto neg = seq_of({gen(1)});
  neg.events[0].t = -0.5;
  REQUIRE_THROWS_AS(validate_sequence(neg), DataError);
  auto wrong_tag = seq_of({gen(1)});
  wrong_tag.events[0].news_id = 4;
  REQUIRE_THROWS_AS(validate_sequence(wrong_tag), DataError);
}

TEST_CASE("build_outcome_samples spec examples") {
  SECTION("[e, g] gives one with-treatment sample with empty covariates") {
    auto s = build_outcome_samples(seq_of({eng(1), gen(2)}));
    REQUIRE(s.size() == 1);
    REQUIRE(s[0].outcome.t == 2.0);
    REQUIRE(s[0].treatment.has_value());
    REQUIRE(s[0].treatment->t == 1.0);
    REQUIRE(s[0].covariates.events.empty());
  }
  SECTION("[g, g] gives one no-treatment sample") {
    auto s = build_outcome_samples(seq_of({gen(1), gen(2)}));
    REQUIRE(s.size() == 1);
    REQUIRE(s[0].outcome.t == 2.0);
    REQUIRE_FALSE(s[0].treatment.has_value());
    REQUIRE(s[0].covariates.events.size() == 1);
    REQUIRE(s[0].covariates.events[0].t == 1.0);
  }
  SECTION("[g1, e1, g2, e2, e3, g3] enumerated by hand") {
    auto s = build_outcome_samples(
        seq_of({gen(1), eng(2), gen(3), eng(4), eng(5), gen(6)}));
    REQUIRE(s.size() == 2);
    // {Y=g2, Tr=e1, X=[g1]}
    REQUIRE(s[0].outcome.t == 3.0);
    REQUIRE(s[0].treatment->t == 2.0);
    REQUIRE(s[0].covariates.events.size() == 1);
    REQUIRE(s[0].covariates.events[0].t == 1.0);
    // {Y=g3, Tr=e3, X=[g1, e1, g2, e2]} -- e2 lands in X
    REQUIRE(s[1].outcome.t == 6.0);
    REQUIRE(s[1].treatment->t == 5.0);
    REQUIRE(s[1].covariates.events.size() == 4);
    REQUIRE(s[1].covariates.events[3].t == 4.0);
    REQUIRE(s[1].covariates.events[3].kind == EventKind::engagement);
  }
}

TEST_CASE("build_outcome_samples is exhaustive and exclusive") {
  RngStream rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_sequence(rng, 1 + static_cast<int>(rng.uniform_int(30)));
    auto samples = build_outcome_samples(s);
    std::set<double> outcome_ts;
    for (const auto& sm : samples) {
      REQUIRE(sm.outcome.kind == EventKind::generation);
      REQUIRE(outcome_ts.insert(sm.outcome.t).second);
      // covariates + optional treatment == full prefix before outcome
      std::size_t n_prefix = sm.covariates.events.size() +
                             (sm.treatment.has_value() ? 1 : 0);
      std::size_t idx = 0;
      while (idx < s.events.size() && s.events[idx].t < sm.outcome.t) ++idx;
      REQUIRE(n_prefix == idx);
      if (sm.treatment) {
        REQUIRE(sm.treatment->t < sm.outcome.t);
        if (!sm.covariates.events.empty())
          REQUIRE(sm.covariates.events.back().t < sm.treatment->t);
      }
    }
    // every generation event with a predecessor appears exactly once
    std::size_t expected = 0;
    for (std::size_t i = 1; i < s.events.size(); ++i)
      if (s.events[i].kind == EventKind::generation) ++expected;
    REQUIRE(samples.size() == expected);
  }
}

TEST_CASE("build_treatment_samples spec examples") {
  auto a = build_treatment_samples(seq_of({gen(1), eng(2)}));
  REQUIRE(a.size() == 1);
  REQUIRE(a[0].target.t == 2.0);
  REQUIRE(a[0].covariates.events.size() == 1);

  REQUIRE(build_treatment_samples(seq_of({eng(1)})).empty());

  // first engagement has no predecessor, so only e2 yields a pair
  auto c = build_treatment_samples(seq_of({eng(1), gen(2), eng(3)}));
  REQUIRE(c.size() == 1);
  REQUIRE(c[0].target.t == 3.0);
  REQUIRE(c[0].covariates.events.size() == 2);
}

TEST_CASE("thinning zero rate yields no events") {
  RngStream rng(1);
  auto pts = thinning_sample([](double) { return 0.0; }, 1.0, 0, 10, rng);
  REQUIRE(pts.empty());
}

TEST_CASE("thinning constant rate matches Poisson mean and variance") {
  RngStream rng(2);
  const int reps = 1000;
  const double lam = 2.0, horizon = 10.0, expect = lam * horizon;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < reps; ++i) {
    auto pts =
        thinning_sample([](double) { return 2.0; }, 2.5, 0, horizon, rng);
    sum += static_cast<double>(pts.size());
    sum2 += static_cast<double>(pts.size()) * static_cast<double>(pts.size());
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  REQUIRE(std::abs(mean - expect) < 0.45);  // 3 SE of Poisson(20) mean
  REQUIRE(std::abs(var - expect) < 3.0 * expect * std::sqrt(2.0 / (reps - 1)));
}

TEST_CASE("thinning decaying rate matches analytic integral") {
  RngStream rng(3);
  const int reps = 1000;
  double sum = 0;
  for (int i = 0; i < reps; ++i)
    sum += static_cast<double>(
        thinning_sample([](double t) { return std::exp(-t); }, 1.0, 0, 20, rng)
            .size());
  REQUIRE(std::abs(sum / reps - 1.0) < 0.1);  // integral = 1 - e^-20
}

TEST_CASE("thinning rejects bad bounds and detects violations") {
  RngStream rng(4);
  REQUIRE_THROWS_AS(
      thinning_sample([](double) { return 1.0; }, 0.0, 0, 1, rng),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      thinning_sample([](double) { return 2.0; }, 1.0, 0, 10, rng),
      NumericError);
}

TEST_CASE("quadrature spec examples") {
  REQUIRE(quadrature([](double) { return 1.0; }, 0, 1, 0.01) ==
          Catch::Approx(1.0).margin(1e-12));
  REQUIRE(quadrature([](double t) { return t; }, 0, 1, 0.001) ==
          Catch::Approx(0.5).margin(0.001));
  REQUIRE(quadrature([](double t) { return std::exp(t); }, 0, 2, 1e-4) ==
          Catch::Approx(std::exp(2.0) - 1.0).margin(1e-3));
  REQUIRE(quadrature([](double) { return 1.0; }, 3, 3, 0.1) == 0.0);
}

TEST_CASE("quadrature error shrinks at least linearly in step") {
  // For f = t^2 the left-Riemann error is step/2 - step^2/6, so halving the
  // step gives a ratio of 0.5 + O(step); assert linear order with that slack.
  auto f = [](double t) { return t * t; };
  const double truth = 1.0 / 3.0;
  const double e1 = std::abs(quadrature(f, 0, 1, 0.02) - truth);
  const double e2 = std::abs(quadrature(f, 0, 1, 0.01) - truth);
  const double e3 = std::abs(quadrature(f, 0, 1, 0.005) - truth);
  REQUIRE(e2 <= 0.52 * e1);
  REQUIRE(e3 <= 0.52 * e2);
}

TEST_CASE("quadrature_vec integrates per dimension") {
  auto v = quadrature_vec(
      [](double t) { return std::vector<double>{1.0, t}; }, 0, 2, 1e-3);
  REQUIRE(v[0] == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(v[1] == Catch::Approx(2.0).margin(0.01));
}

TEST_CASE("dataset round-trips exactly with fixed field order") {
  std::vector<EventSequence> data{
      seq_of({eng(2.5e-13, 3), gen(0.1234567890123456789)}, 11),
      seq_of({gen(1e6)}, 12)};
  ArtifactHeader h{kEventsFormat, "abc123", {{"world", 9}}};
  const std::string text = serialize_dataset(data, h);

  // field order per the interface contract
  const std::string line1 = split_lines(text)[1];
  REQUIRE(line1.find("user_id") < line1.find("events"));
  REQUIRE(line1.find("\"kind\"") < line1.find("\"t\""));
  REQUIRE(line1.find("\"t\"") < line1.find("\"feature\""));
  REQUIRE(line1.find("\"feature\"") < line1.find("\"news_id\""));

  Dataset ds = parse_dataset(text, 2);
  REQUIRE(ds.header.config_hash == "abc123");
  REQUIRE(ds.header.seeds.at("world") == 9);
  REQUIRE(ds.sequences.size() == 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(ds.sequences[i].user_id == data[i].user_id);
    REQUIRE(ds.sequences[i].events.size() == data[i].events.size());
    for (std::size_t k = 0; k < data[i].events.size(); ++k) {
      REQUIRE(ds.sequences[i].events[k].t == data[i].events[k].t);
      REQUIRE(ds.sequences[i].events[k].feature == data[i].events[k].feature);
      REQUIRE(ds.sequences[i].events[k].news_id == data[i].events[k].news_id);
    }
  }
  // byte-identical re-serialization
  REQUIRE(serialize_dataset(ds.sequences, h) == text);
}

TEST_CASE("dataset parser rejects foreign formats") {
  REQUIRE_THROWS_AS(
      parse_dataset("{\"type\":\"header\",\"format\":\"other.v9\"}\n"),
      VersionError);
  REQUIRE_THROWS_AS(parse_dataset("not json\n"), DataError);
}
