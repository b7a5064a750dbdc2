#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cntpp/core/errors.hpp"

namespace cntpp {

struct NetShape {
  std::size_t width = 32;
  std::size_t depth = 2;
  double output_scale = 1.0;
};

inline void to_json(nlohmann::ordered_json& j, const NetShape& s) {
  j = {{"width", s.width}, {"depth", s.depth}, {"output_scale", s.output_scale}};
}
inline void from_json(const nlohmann::json& j, NetShape& s) {
  s.width = j.value("width", std::size_t{32});
  s.depth = j.value("depth", std::size_t{2});
  s.output_scale = j.value("output_scale", 1.0);
}

// Full configuration of the synthetic world. Everything that shapes the
// generative process lives here so a (spec, seed) pair pins the dataset.
struct WorldSpec {
  int n_users = 1500;
  int n_news = 40;
  int d_hidden = 8;
  int d_f = 4;
  double t_end = 50.0;
  std::uint64_t seed = 1;

  // Initial draws: u0 ~ user_scale * N(0, I), v_topic ~ topic_scale * N(0, I),
  // v_in ~ influence_scale * N(0, I). News post times ~ U(0, news_post_window
  // * t_end).
  double user_scale = 0.22;
  double topic_scale = 0.012;
  double influence_scale = 0.25;
  double news_post_window = 0.5;

  NetShape nn_rec{32, 2, 0.02};
  NetShape nn_post{32, 2, 0.10};
  NetShape nn_news{32, 2, 3.0};
  NetShape nn_user{32, 2, 1.0};
  NetShape nn_scale{32, 2, 3.0};
  double user_noise = 0.05;  // hidden-layer noise scale in NN_user

  int max_events_per_user = 500;
  std::vector<std::int64_t> neutralize_news;  // v_in forced to 0, excitation off

  // Desk-scale preset: a 10x downscale of the paper-scale world that runs on
  // a workstation.
  static WorldSpec desk_scale() { return WorldSpec{}; }

  static WorldSpec paper_scale() {
    WorldSpec s;
    s.n_users = 15000;
    s.n_news = 120;
    s.nn_rec.output_scale = 0.0067;  // keeps total branching comparable
    return s;
  }
};

inline void to_json(nlohmann::ordered_json& j, const WorldSpec& s) {
  j = nlohmann::ordered_json{{"n_users", s.n_users},
                             {"n_news", s.n_news},
                             {"d_hidden", s.d_hidden},
                             {"d_f", s.d_f},
                             {"t_end", s.t_end},
                             {"seed", s.seed},
                             {"user_scale", s.user_scale},
                             {"topic_scale", s.topic_scale},
                             {"influence_scale", s.influence_scale},
                             {"news_post_window", s.news_post_window},
                             {"user_noise", s.user_noise},
                             {"max_events_per_user", s.max_events_per_user},
                             {"neutralize_news", s.neutralize_news}};
  nlohmann::ordered_json nets;
  to_json(nets["rec"], s.nn_rec);
  to_json(nets["post"], s.nn_post);
  to_json(nets["news"], s.nn_news);
  to_json(nets["user"], s.nn_user);
  to_json(nets["scale"], s.nn_scale);
  j["nets"] = std::move(nets);
}

inline void from_json(const nlohmann::json& j, WorldSpec& s) {
  WorldSpec d;
  s.n_users = j.value("n_users", d.n_users);
  s.n_news = j.value("n_news", d.n_news);
  s.d_hidden = j.value("d_hidden", d.d_hidden);
  s.d_f = j.value("d_f", d.d_f);
  s.t_end = j.value("t_end", d.t_end);
  s.seed = j.value("seed", d.seed);
  s.user_scale = j.value("user_scale", d.user_scale);
  s.topic_scale = j.value("topic_scale", d.topic_scale);
  s.influence_scale = j.value("influence_scale", d.influence_scale);
  s.news_post_window = j.value("news_post_window", d.news_post_window);
  s.user_noise = j.value("user_noise", d.user_noise);
  s.max_events_per_user = j.value("max_events_per_user", d.max_events_per_user);
  s.neutralize_news =
      j.value("neutralize_news", std::vector<std::int64_t>{});
  if (j.contains("nets")) {
    const auto& nets = j.at("nets");
    if (nets.contains("rec")) from_json(nets.at("rec"), s.nn_rec);
    if (nets.contains("post")) from_json(nets.at("post"), s.nn_post);
    if (nets.contains("news")) from_json(nets.at("news"), s.nn_news);
    if (nets.contains("user")) from_json(nets.at("user"), s.nn_user);
    if (nets.contains("scale")) from_json(nets.at("scale"), s.nn_scale);
  }
}

inline void check_world_spec(const WorldSpec& s) {
  if (s.n_users <= 0 || s.n_news < 0 || s.d_hidden <= 0 || s.d_f <= 0)
    throw ConfigError("world spec: counts must be positive");
  if (!(s.t_end > 0.0)) throw ConfigError("world spec: t_end must be > 0");
  if (s.max_events_per_user <= 0)
    throw ConfigError("world spec: max_events_per_user must be > 0");
  for (auto id : s.neutralize_news)
    if (id < 0 || id >= s.n_news)
      throw ConfigError("world spec: neutralize_news id out of range");
}

}  // namespace cntpp
