#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cntpp/core/errors.hpp"
#include "cntpp/core/event.hpp"
#include "cntpp/core/parallel.hpp"
#include "cntpp/core/rng.hpp"
#include "cntpp/core/thinning.hpp"
#include "cntpp/world/random_net.hpp"
#include "cntpp/world/spec.hpp"

namespace cntpp {

struct NewsItem {
  std::int64_t id = 0;
  std::vector<double> v_topic;
  std::vector<double> v_in;
  double t_p = 0.0;
  std::vector<double> observed_feature;  // NN_news(v_topic, v_in)
};

struct StatusCheckpoint {
  double t = 0.0;
  std::vector<double> u;
};

struct UserTrajectory {
  std::int64_t user_id = 0;
  std::vector<double> u0;
  std::vector<StatusCheckpoint> status_checkpoints;  // one per engagement
  EventSequence events;
};

struct EngagementDelta {
  std::int64_t user_id = 0;
  int engagement_index = 0;  // index into the merged event list
  std::int64_t news_id = 0;
  double t = 0.0;
  std::vector<double> delta_u;
  std::optional<std::vector<double>> oracle_ite;  // filled by the oracle pass
};

struct GroundTruth {
  std::string world_digest;
  std::vector<EngagementDelta> deltas;
};

struct OracleResult {
  bool defined = false;
  std::vector<double> ite;  // empty when undefined
  std::vector<double> se;   // Monte-Carlo standard error per dimension
  double mu1 = 0.0, mu0 = 0.0;
};

// The synthetic social-media world: users with hidden status vectors, news
// with topic/influence vectors, engagement and posting processes excited by
// history, and status updates per engagement. Deterministic given the spec.
class World {
 public:
  explicit World(const WorldSpec& spec) : spec_(spec) {
    check_world_spec(spec);
    RngStream net_rng = RngStream::derive(spec.seed, "world_nets");
    const std::size_t dh = spec.d_hidden, df = spec.d_f;
    nn_rec_ = FixedMlp(df + dh, 1, spec.nn_rec.width, spec.nn_rec.depth,
                       spec.nn_rec.output_scale, net_rng);
    nn_post_ = FixedMlp(df + dh, 1, spec.nn_post.width, spec.nn_post.depth,
                        spec.nn_post.output_scale, net_rng);
    nn_news_ = FixedMlp(2 * dh, df, spec.nn_news.width, spec.nn_news.depth,
                        spec.nn_news.output_scale, net_rng);
    nn_user_ = FixedMlp(dh + 1, df, spec.nn_user.width, spec.nn_user.depth,
                        spec.nn_user.output_scale, net_rng);
    nn_scale_ = FixedMlp(2 * dh, 1, spec.nn_scale.width, spec.nn_scale.depth,
                         spec.nn_scale.output_scale, net_rng);

    news_.resize(spec.n_news);
    for (int n = 0; n < spec.n_news; ++n) {
      RngStream rng = RngStream::derive(spec.seed, "news_init",
                                        {static_cast<std::uint64_t>(n)});
      NewsItem& item = news_[n];
      item.id = n;
      item.v_topic.resize(dh);
      item.v_in.resize(dh);
      for (auto& x : item.v_topic) x = spec.topic_scale * rng.normal();
      for (auto& x : item.v_in) x = spec.influence_scale * rng.normal();
      item.t_p = rng.uniform(0.0, spec.news_post_window * spec.t_end);
      if (is_neutralized(n)) std::fill(item.v_in.begin(), item.v_in.end(), 0.0);
      std::vector<double> in(item.v_topic);
      in.insert(in.end(), item.v_in.begin(), item.v_in.end());
      item.observed_feature = nn_news_.eval(in);
    }
  }

  const WorldSpec& spec() const { return spec_; }
  const std::vector<NewsItem>& news() const { return news_; }

  bool is_neutralized(std::int64_t news_id) const {
    return std::find(spec_.neutralize_news.begin(),
                     spec_.neutralize_news.end(),
                     news_id) != spec_.neutralize_news.end();
  }

  // lambda_e(n, t | u, S_h) = max(0, v_topic . u + sum_j exp(t_j - t) *
  // NN_rec(f_j, v_topic)). Events from neutralized news contribute nothing.
  double engagement_intensity(const NewsItem& news, double t,
                              std::span<const double> u,
                              const EventSequence& history) const {
    double acc = dot(news.v_topic, u);
    for (const MarkedEvent& e : history.events) {
      if (e.t >= t) break;
      if (excitation_disabled(e)) continue;
      acc += std::exp(e.t - t) * rec_coef(e.feature, news);
    }
    return std::max(0.0, acc);
  }

  // lambda_g(t | u, S_h) = max(0, u . u + sum_j exp(t_j - t) * NN_post(f_j, u)).
  double generation_intensity(double t, std::span<const double> u,
                              const EventSequence& history) const {
    double acc = dot(u, u);
    for (const MarkedEvent& e : history.events) {
      if (e.t >= t) break;
      if (excitation_disabled(e)) continue;
      acc += std::exp(e.t - t) * post_coef(e.feature, u);
    }
    return std::max(0.0, acc);
  }

  // f_user(i, t): noisy projection of (u, t) to the observable feature space.
  std::vector<double> observe_post(std::span<const double> u, double t,
                                   RngStream& rng) const {
    std::vector<double> in(u.begin(), u.end());
    in.push_back(t);
    return nn_user_.eval_noisy(in, spec_.user_noise, rng);
  }

  // u' = u + NN_scale(v_topic, u) * v_in. Returns (u', delta).
  std::pair<std::vector<double>, std::vector<double>> apply_engagement(
      std::span<const double> u, const NewsItem& news) const {
    std::vector<double> in(news.v_topic);
    in.insert(in.end(), u.begin(), u.end());
    const double s = nn_scale_.eval_scalar(in);
    std::vector<double> delta(news.v_in.size());
    std::vector<double> next(u.begin(), u.end());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta[i] = s * news.v_in[i];
      next[i] += delta[i];
    }
    return {std::move(next), std::move(delta)};
  }

  // Runs the full competing-risks loop for every user. Deterministic given
  // the spec; parallel across users with per-user streams.
  std::pair<std::vector<UserTrajectory>, GroundTruth> simulate(
      int threads = 1) const {
    std::vector<UserTrajectory> trajs(spec_.n_users);
    std::vector<std::vector<EngagementDelta>> deltas(spec_.n_users);
    std::vector<std::string> failures(spec_.n_users);
    parallel_for(spec_.n_users, threads, [&](std::size_t i) {
      try {
        trajs[i] = simulate_user(static_cast<std::int64_t>(i), &deltas[i]);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    });
    for (const auto& f : failures)
      if (!f.empty()) throw NumericError("simulate: " + f);
    GroundTruth truth;
    truth.world_digest = digest();
    for (auto& d : deltas)
      truth.deltas.insert(truth.deltas.end(),
                          std::make_move_iterator(d.begin()),
                          std::make_move_iterator(d.end()));
    return {std::move(trajs), std::move(truth)};
  }

  UserTrajectory simulate_user(std::int64_t user_id,
                               std::vector<EngagementDelta>* deltas) const {
    RngStream rng = RngStream::derive(spec_.seed, "user_sim",
                                      {static_cast<std::uint64_t>(user_id)});
    UserTrajectory traj;
    traj.user_id = user_id;
    traj.u0 = initial_status(user_id);

    Runner runner(*this, traj.u0);
    runner.run(0.0, spec_.t_end, rng, spec_.max_events_per_user,
               [&](const MarkedEvent& e, const std::vector<double>& u_after,
                   const std::vector<double>* delta) {
                 if (delta) {
                   traj.status_checkpoints.push_back({e.t, u_after});
                   if (deltas)
                     deltas->push_back(
                         {user_id,
                          static_cast<int>(traj.events.events.size()),
                          *e.news_id, e.t, *delta, std::nullopt});
                 }
                 traj.events.events.push_back(e);
               });
    traj.events.user_id = user_id;
    return traj;
  }

  // Monte-Carlo ground-truth ITE for one engagement: R fresh rollouts of the
  // true process with the engagement applied vs. skipped (status update
  // suppressed and the event removed from history). Per arm the ratio of
  // expectations phi_hat / mu_hat is formed, never a mean of ratios.
  OracleResult oracle_ite(const UserTrajectory& traj, int engagement_index,
                          double window, int rollouts,
                          std::uint64_t oracle_seed,
                          double eps_count = 1e-3) const {
    const auto& events = traj.events.events;
    if (engagement_index < 0 ||
        engagement_index >= static_cast<int>(events.size()) ||
        events[engagement_index].kind != EventKind::engagement)
      throw DataError("oracle_ite: invalid engagement index");
    const double t0 = events[engagement_index].t;

    // status before this engagement = checkpoint of the previous engagement
    std::size_t ck = 0;
    for (int i = 0; i < engagement_index; ++i)
      if (events[i].kind == EventKind::engagement) ++ck;
    const std::vector<double>& u_before =
        ck == 0 ? traj.u0 : traj.status_checkpoints[ck - 1].u;
    const std::vector<double>& u_after = traj.status_checkpoints[ck].u;

    // Arm state is seeded once (the cached excitation coefficients are
    // identical across rollouts) and copied per rollout.
    const std::vector<MarkedEvent> prefix(
        traj.events.events.begin(),
        traj.events.events.begin() + engagement_index + 1);
    Runner seeded1(*this, u_after);
    seeded1.seed_history(prefix, -1);
    Runner seeded0(*this, u_before);
    seeded0.seed_history(prefix, engagement_index);

    const int df = spec_.d_f;
    ArmAccum arm1(df), arm0(df);
    for (int r = 0; r < rollouts; ++r) {
      arm1.add(rollout_from(seeded1, t0, window,
                            rollout_stream(traj.user_id, engagement_index,
                                           1, r, oracle_seed)));
      arm0.add(rollout_from(seeded0, t0, window,
                            rollout_stream(traj.user_id, engagement_index,
                                           0, r, oracle_seed)));
    }

    OracleResult res;
    res.mu1 = arm1.mean_count();
    res.mu0 = arm0.mean_count();
    if (res.mu1 < eps_count || res.mu0 < eps_count) return res;
    res.defined = true;
    res.ite.resize(df);
    res.se.resize(df);
    for (int d = 0; d < df; ++d) {
      const double f1 = arm1.ratio(d), f0 = arm0.ratio(d);
      res.ite[d] = f1 - f0;
      res.se[d] = std::sqrt(arm1.ratio_var(d) + arm0.ratio_var(d));
    }
    return res;
  }

  // Hash of the spec, every random network weight and all news vectors.
  std::string digest() const {
    Fnv1a h;
    nlohmann::ordered_json j;
    to_json(j, spec_);
    h.update(j.dump());
    nn_rec_.hash_into(h);
    nn_post_.hash_into(h);
    nn_news_.hash_into(h);
    nn_user_.hash_into(h);
    nn_scale_.hash_into(h);
    for (const auto& n : news_) {
      for (double v : n.v_topic) h.update_double(v);
      for (double v : n.v_in) h.update_double(v);
      h.update_double(n.t_p);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h.digest()));
    return buf;
  }

  std::vector<double> initial_status(std::int64_t user_id) const {
    RngStream rng = RngStream::derive(spec_.seed, "user_init",
                                      {static_cast<std::uint64_t>(user_id)});
    std::vector<double> u(spec_.d_hidden);
    for (auto& x : u) x = spec_.user_scale * rng.normal();
    return u;
  }

  // Estimates the expected offspring per event (total excitation branching
  // ratio); the exponential kernel integrates to 1, so this is the mean
  // positive excitation coefficient summed over targets.
  double estimate_branching_ratio(int samples = 200) const {
    RngStream rng = RngStream::derive(spec_.seed, "branching_probe");
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
      std::vector<double> u = initial_status(static_cast<std::int64_t>(
          rng.uniform_int(static_cast<std::uint64_t>(spec_.n_users))));
      std::vector<double> f =
          observe_post(u, rng.uniform(0.0, spec_.t_end), rng);
      double b = std::max(0.0, post_coef(f, u));
      for (const auto& n : news_) b += std::max(0.0, rec_coef(f, n));
      acc += b;
    }
    return acc / samples;
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> warnings;
    const double b = estimate_branching_ratio();
    if (b > 0.9)
      warnings.push_back("expected branching ratio " + std::to_string(b) +
                         " exceeds 0.9; excitation may be supercritical");
    return warnings;
  }

  // Incremental simulation state shared by the generator and the oracle
  // rollouts. Coefficients NN_rec(f_j, v_n) are cached per (event, news);
  // NN_post(f_j, u) is refreshed whenever the status changes.
  class Runner {
   public:
    Runner(const World& w, std::vector<double> u0)
        : w_(w), u_(std::move(u0)), base_g_(dot(u_, u_)) {}

    // Seeds history from an existing prefix, skipping one index (< 0 keeps
    // everything). Status must already reflect the chosen arm.
    void seed_history(const std::vector<MarkedEvent>& prefix, int skip_index) {
      for (int i = 0; i < static_cast<int>(prefix.size()); ++i) {
        if (i == skip_index) continue;
        push_history(prefix[i]);
      }
      refresh_post_coefs();
    }

    double lambda_e(const NewsItem& n, double t) const {
      double acc = dot(n.v_topic, u_);
      for (const HistEvent& h : hist_) {
        if (h.t >= t) break;
        if (!h.excites) continue;
        acc += std::exp(h.t - t) * h.c_e[static_cast<std::size_t>(n.id)];
      }
      return std::max(0.0, acc);
    }

    double lambda_g(double t) const {
      double acc = base_g_;
      for (const HistEvent& h : hist_) {
        if (h.t >= t) break;
        if (!h.excites) continue;
        acc += std::exp(h.t - t) * h.c_g;
      }
      return std::max(0.0, acc);
    }

    const std::vector<double>& status() const { return u_; }

    // The competing-risks loop (one full pass from t_start to t_limit).
    // on_event(event, u_after, delta_or_null) fires per recorded event.
    template <class OnEvent>
    void run(double t_start, double t_limit, RngStream& rng, int max_events,
             OnEvent&& on_event) {
      double t_now = t_start;
      int emitted = 0;
      while (true) {
        double t_cur = std::numeric_limits<double>::infinity();
        int kind_news = -1;  // -1 = generation
        std::vector<double> f_cur;

        const double bg = bound_g(t_now);
        if (bg > 0.0) {
          auto tg = thinning_next([&](double t) { return lambda_g(t); }, bg,
                                  t_now, t_limit, rng);
          if (tg) t_cur = *tg;
        }
        // feature drawn for the posting candidate even if an engagement wins
        if (std::isfinite(t_cur)) f_cur = w_.observe_post(u_, t_cur, rng);

        for (const NewsItem& n : w_.news_) {
          if (n.t_p >= t_cur) continue;
          const double start = std::max(t_now, n.t_p);
          const double end = std::min(t_cur, t_limit);
          if (start >= end) continue;
          const double be = bound_e(n, start);
          if (be <= 0.0) continue;
          auto te = thinning_next([&](double t) { return lambda_e(n, t); },
                                  be, start, end, rng);
          if (te && *te < t_cur) {
            t_cur = *te;
            kind_news = static_cast<int>(n.id);
            f_cur = n.observed_feature;
          }
        }

        if (!(t_cur < t_limit)) return;
        // exact ties with the previous event get the smallest representable bump
        if (!hist_.empty() && t_cur <= hist_.back().t) {
          t_cur = std::nextafter(hist_.back().t,
                                 std::numeric_limits<double>::infinity());
          if (!(t_cur < t_limit)) return;
        }
        if (++emitted > max_events)
          throw NumericError(
              "runaway excitation: user exceeded max event count " +
              std::to_string(max_events));

        MarkedEvent ev;
        ev.t = t_cur;
        ev.feature = f_cur;
        if (kind_news >= 0) {
          ev.kind = EventKind::engagement;
          ev.news_id = kind_news;
          auto [next_u, delta] =
              w_.apply_engagement(u_, w_.news_[kind_news]);
          u_ = std::move(next_u);
          base_g_ = dot(u_, u_);
          push_history(ev);
          refresh_post_coefs();
          on_event(ev, u_, &delta);
        } else {
          ev.kind = EventKind::generation;
          push_history(ev);
          hist_.back().c_g = w_.post_coef(ev.feature, u_);
          on_event(ev, u_, nullptr);
        }
        t_now = t_cur;
      }
    }

   private:
    struct HistEvent {
      double t = 0.0;
      std::vector<double> feature;
      bool excites = true;
      double c_g = 0.0;            // NN_post(f, u) at current status
      std::vector<double> c_e;     // NN_rec(f, v_topic(n)) per news
    };

    void push_history(const MarkedEvent& e) {
      HistEvent h;
      h.t = e.t;
      h.feature = e.feature;
      h.excites = !w_.excitation_disabled(e);
      h.c_e.resize(w_.news_.size());
      if (h.excites)
        for (std::size_t n = 0; n < w_.news_.size(); ++n)
          h.c_e[n] = w_.rec_coef(h.feature, w_.news_[n]);
      hist_.push_back(std::move(h));
    }

    void refresh_post_coefs() {
      for (HistEvent& h : hist_)
        h.c_g = h.excites ? w_.post_coef(h.feature, u_) : 0.0;
    }

    // max(0, base) + positive decayed excitation bounds lambda on [t0, inf).
    double bound_g(double t0) const {
      double pos = 0.0;
      for (const HistEvent& h : hist_)
        if (h.excites && h.c_g > 0.0) pos += std::exp(h.t - t0) * h.c_g;
      return std::max(0.0, base_g_) + pos;
    }

    double bound_e(const NewsItem& n, double t0) const {
      double pos = 0.0;
      for (const HistEvent& h : hist_)
        if (h.excites) {
          const double c = h.c_e[static_cast<std::size_t>(n.id)];
          if (c > 0.0 && h.t < t0) pos += std::exp(h.t - t0) * c;
          else if (c > 0.0) pos += c;  // not yet decayed at t0
        }
      return std::max(0.0, dot(n.v_topic, u_)) + pos;
    }

    const World& w_;
    std::vector<double> u_;
    double base_g_ = 0.0;
    std::vector<HistEvent> hist_;
  };

 private:
  friend class Runner;

  struct RolloutStats {
    std::vector<double> feature_sum;
    std::size_t count = 0;
  };

  struct ArmAccum {
    explicit ArmAccum(int df)
        : sum_f(df, 0.0), sum_n(0.0), rows_f(), rows_n() {}
    std::vector<double> sum_f;
    double sum_n;
    std::vector<std::vector<double>> rows_f;
    std::vector<double> rows_n;

    void add(RolloutStats s) {
      for (std::size_t d = 0; d < sum_f.size(); ++d) sum_f[d] += s.feature_sum[d];
      sum_n += static_cast<double>(s.count);
      rows_f.push_back(std::move(s.feature_sum));
      rows_n.push_back(static_cast<double>(s.count));
    }
    double mean_count() const {
      return sum_n / static_cast<double>(rows_n.size());
    }
    double ratio(int d) const { return sum_f[d] / sum_n; }
    // Delta-method variance of the ratio estimator over rollouts.
    double ratio_var(int d) const {
      const double R = static_cast<double>(rows_n.size());
      const double f = ratio(d), mu = mean_count();
      double acc = 0.0;
      for (std::size_t r = 0; r < rows_n.size(); ++r) {
        const double z = rows_f[r][d] - f * rows_n[r];
        acc += z * z;
      }
      const double var_z = acc / std::max(1.0, R - 1.0);
      return var_z / (R * mu * mu);
    }
  };

  static RngStream rollout_stream(std::int64_t user_id, int engagement_index,
                                  int arm, int r, std::uint64_t oracle_seed) {
    return RngStream::derive(oracle_seed, "oracle_rollout",
                             {static_cast<std::uint64_t>(user_id),
                              static_cast<std::uint64_t>(engagement_index),
                              static_cast<std::uint64_t>(arm),
                              static_cast<std::uint64_t>(r)});
  }

  RolloutStats rollout_from(const Runner& seeded, double t0, double window,
                            RngStream rng) const {
    Runner runner = seeded;
    RolloutStats stats;
    stats.feature_sum.assign(spec_.d_f, 0.0);
    runner.run(t0, t0 + window, rng, spec_.max_events_per_user,
               [&](const MarkedEvent& e, const std::vector<double>&,
                   const std::vector<double>*) {
                 if (e.kind != EventKind::generation) return;
                 ++stats.count;
                 for (int d = 0; d < spec_.d_f; ++d)
                   stats.feature_sum[d] += e.feature[d];
               });
    return stats;
  }

  bool excitation_disabled(const MarkedEvent& e) const {
    return e.kind == EventKind::engagement && e.news_id &&
           is_neutralized(*e.news_id);
  }

  double rec_coef(const std::vector<double>& feature,
                  const NewsItem& news) const {
    std::vector<double> in(feature);
    in.insert(in.end(), news.v_topic.begin(), news.v_topic.end());
    return nn_rec_.eval_scalar(in);
  }

  double post_coef(const std::vector<double>& feature,
                   std::span<const double> u) const {
    std::vector<double> in(feature);
    in.insert(in.end(), u.begin(), u.end());
    return nn_post_.eval_scalar(in);
  }

  static double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }

  WorldSpec spec_;
  std::vector<NewsItem> news_;
  FixedMlp nn_rec_, nn_post_, nn_news_, nn_user_, nn_scale_;
};

}  // namespace cntpp
