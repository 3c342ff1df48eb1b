#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaitlab/experiment.hpp"

namespace gaitlab {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size())
    throw std::invalid_argument("config: trailing junk in " + key + ": '" + v + "'");
  return out;
}

inline long parse_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
  if (used != v.size())
    throw std::invalid_argument("config: trailing junk in " + key + ": '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_long(key, v));
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + v + "'");
  }
  if (used != v.size())
    throw std::invalid_argument("config: trailing junk in " + key + ": '" + v + "'");
  return static_cast<std::uint64_t>(out);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad bool for " + key + ": '" + v + "'");
}

inline std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

// `key = value` lines, '#' comments, blank lines ignored. Keys are flat with
// dotted section prefixes; duplicates are rejected so a typo cannot silently
// lose an earlier setting.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value, got '" + t + "'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return out;
}

// Applies parsed keys onto the fully defaulted RunConfig. Every knob has a
// default, so an empty config is the committed benchmark; unknown keys are
// errors rather than silent no-ops.
inline RunConfig run_config_from_entries(const std::map<std::string, std::string>& entries) {
  RunConfig cfg;
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"run.name", [](RunConfig& c, const std::string&, const std::string& v) { c.run_name = v; }},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = detail::parse_u64(k, v);
       }},
      {"subjects",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.subjects = detail::parse_int(k, v);
       }},
      {"methods",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.methods = detail::split_csv(v);
       }},
      {"arch", [](RunConfig& c, const std::string&, const std::string& v) { c.arch = v; }},

#define GAITLAB_DBL(key, field)                                      \
  {key, [](RunConfig& c, const std::string& k, const std::string& v) { \
     c.field = detail::parse_double(k, v);                           \
   }}
#define GAITLAB_INT(key, field)                                      \
  {key, [](RunConfig& c, const std::string& k, const std::string& v) { \
     c.field = detail::parse_int(k, v);                              \
   }}
      GAITLAB_DBL("sim.walk_speed", sim.walk_speed),
      GAITLAB_DBL("sim.step_duration", sim.step_duration),
      GAITLAB_DBL("sim.double_support_fraction", sim.double_support_fraction),
      GAITLAB_DBL("sim.step_width", sim.step_width),
      GAITLAB_DBL("sim.stride_length", sim.stride_length),
      GAITLAB_DBL("sim.sway_amplitude", sim.sway_amplitude),
      GAITLAB_DBL("sim.duration", sim.duration),
      GAITLAB_DBL("sim.lrf_rate", sim.lrf_rate),
      GAITLAB_DBL("sim.camera_rate", sim.camera_rate),
      GAITLAB_DBL("sim.com_noise_x", sim.com_noise_x),
      GAITLAB_DBL("sim.com_noise_y", sim.com_noise_y),
      GAITLAB_DBL("sim.leg_noise", sim.leg_noise),
      GAITLAB_DBL("sim.detection_dropout_prob", sim.detection_dropout_prob),
      GAITLAB_INT("sim.fall_risk_count", sim.fall_risk_count),
      GAITLAB_DBL("sim.fall_risk_duration", sim.fall_risk_duration),
      GAITLAB_DBL("sim.fall_risk_offset", sim.fall_risk_offset),
      GAITLAB_DBL("sim.fall_risk_ramp_fraction", sim.fall_risk_ramp_fraction),
      GAITLAB_DBL("sim.fall_risk_min_gap", sim.fall_risk_min_gap),
      GAITLAB_DBL("sim.robot_lead", sim.robot_lead),
      GAITLAB_DBL("sim.lrf_min_range", sim.lrf_min_range),
      GAITLAB_DBL("sim.lrf_max_range", sim.lrf_max_range),
      GAITLAB_DBL("sim.max_step_width", sim.max_step_width),

      GAITLAB_DBL("ukf.sigma_speed", ukf.sigma_speed),
      GAITLAB_DBL("ukf.sigma_turn", ukf.sigma_turn),
      GAITLAB_DBL("ukf.obs_noise_x", ukf.obs_noise_x),
      GAITLAB_DBL("ukf.obs_noise_y", ukf.obs_noise_y),
      GAITLAB_DBL("ukf.alpha", ukf.alpha),
      GAITLAB_DBL("ukf.beta", ukf.beta),
      GAITLAB_DBL("ukf.kappa", ukf.kappa),
      GAITLAB_DBL("ukf.init_speed_std", ukf.init_speed_std),
      GAITLAB_DBL("ukf.init_turn_std", ukf.init_turn_std),
      GAITLAB_DBL("ukf.assoc_window", ukf.assoc_window),
      {"ukf.forward_axis_is_y",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.ukf.forward_axis_is_y = detail::parse_bool(k, v);
       }},

      GAITLAB_DBL("geom.foot_length", geom.foot_length),
      GAITLAB_DBL("geom.foot_width", geom.foot_width),
      GAITLAB_DBL("geom.tibia_forward_offset", geom.tibia_forward_offset),

      GAITLAB_DBL("labels.theta_ds", thresholds.theta_ds),
      GAITLAB_DBL("labels.theta_ss", thresholds.theta_ss),

      GAITLAB_INT("train.epochs", train.epochs),
      GAITLAB_INT("train.batch_size", train.batch_size),
      GAITLAB_DBL("train.lr", train.lr),
      GAITLAB_DBL("train.beta1", train.beta1),
      GAITLAB_DBL("train.beta2", train.beta2),
      GAITLAB_DBL("train.eps", train.eps),
      GAITLAB_DBL("train.weight_decay", train.weight_decay),

      GAITLAB_DBL("svm.c", svm.C),
      GAITLAB_DBL("svm.gamma", svm.gamma),
      GAITLAB_DBL("svm.tol", svm.tol),
      {"svm.max_iter",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.svm.max_iter = detail::parse_long(k, v);
       }},

      GAITLAB_INT("eval.window", eval.window),
      GAITLAB_INT("eval.train_stride", eval.train_stride),
      GAITLAB_DBL("eval.aug_sigma_x", eval.aug_sigma_x),
      GAITLAB_DBL("eval.aug_sigma_y", eval.aug_sigma_y),
      GAITLAB_INT("eval.aug_copies", eval.aug_copies),
      GAITLAB_INT("eval.svm_max_train", eval.svm_max_train),
#undef GAITLAB_DBL
#undef GAITLAB_INT
  };

  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

inline RunConfig run_config_from_text(const std::string& text) {
  return run_config_from_entries(parse_config_text(text));
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_text(buf.str());
}

}  // namespace gaitlab
