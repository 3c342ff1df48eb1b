#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gaitlab/experiment.hpp"

namespace gaitlab {

// Shortest representation that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

// Write-then-rename so readers never see a half-written file and a failed
// run leaves no partial artifact behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.native() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      data[static_cast<std::size_t>(c * m.rows() + r)] = m(r, c);
  j["data"] = std::move(data);
  return j;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw std::runtime_error("matrix_from_json: shape/data mismatch");
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      m(r, c) = data[static_cast<std::size_t>(c * rows + r)];
  return m;
}

// Batch-norm running statistics live outside the trainable set but a usable
// checkpoint needs them.
template <typename Params, typename Fn>
void for_each_running_stat(Params& p, Fn&& fn) {
  const NetworkConfig& c = p.config;
  if (c.use_encoder && c.bn_fc1) {
    fn("bn1.running_mean", p.bn1.running_mean);
    fn("bn1.running_var", p.bn1.running_var);
  }
  if (c.use_encoder && c.bn_fc2) {
    fn("bn2.running_mean", p.bn2.running_mean);
    fn("bn2.running_var", p.bn2.running_var);
  }
  if (c.bn_lstm) {
    fn("bn_out.running_mean", p.bn_out.running_mean);
    fn("bn_out.running_var", p.bn_out.running_var);
  }
}

}  // namespace detail

inline std::string metrics_csv(const ExperimentReport& rep) {
  std::string out = "method,fold,auc,fscore,accuracy,precision,recall\n";
  auto row = [&](const std::string& method, const std::string& fold, double auc,
                 const Metrics& m) {
    out += method + ',' + fold + ',' + fmt_double(auc) + ',' + fmt_double(m.fscore) + ',' +
           fmt_double(m.accuracy) + ',' + fmt_double(m.precision) + ',' +
           fmt_double(m.recall) + '\n';
  };
  for (const MethodReport& mr : rep.methods) {
    for (const FoldReport& fr : mr.folds)
      row(mr.method, std::to_string(fr.test_subject), fr.roc.auc, fr.metrics);
    row(mr.method, "mean", mr.mean_auc, mr.mean_metrics);
  }
  return out;
}

inline std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const RocPoint& p : curve.points)
    out += fmt_double(p.threshold) + ',' + fmt_double(p.fpr) + ',' + fmt_double(p.tpr) + '\n';
  return out;
}

inline std::string scores_csv(const std::vector<double>& scores, const std::vector<int>& truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("scores_csv: size mismatch");
  std::string out = "score,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    out += fmt_double(scores[i]) + ',' + std::to_string(truth[i]) + '\n';
  return out;
}

// Per-tick fused observation vector next to the ground-truth label, one row
// per LRF tick.
inline std::string track_csv(const SubjectTrack& track) {
  std::string out = "t,qx,qy,x_l,y_l,x_r,y_r,phase,raw_qx,raw_qy,from_update,label\n";
  for (const TickRecord& r : track.ticks) {
    out += fmt_double(r.t);
    for (Eigen::Index k = 0; k < r.features.size(); ++k) out += ',' + fmt_double(r.features(k));
    out += ',' + fmt_double(r.raw_qx) + ',' + fmt_double(r.raw_qy) + ',' +
           (r.from_update ? '1' : '0') + ',' + to_string(r.label) + '\n';
  }
  return out;
}

// One JSON object per line, tagged by kind, so streams of different lengths
// coexist in a single inspectable file.
inline std::string episode_jsonl(const Episode& ep) {
  std::ostringstream out;
  nlohmann::json meta;
  meta["kind"] = "meta";
  meta["subject_id"] = ep.subject_id;
  meta["frames"] = ep.frames.size();
  meta["detections"] = ep.com_detections.size();
  meta["gait_observations"] = ep.gait_observations.size();
  out << meta.dump() << '\n';
  for (const TrajectoryFrame& fr : ep.frames) {
    nlohmann::json j;
    j["kind"] = "frame";
    j["t"] = fr.t;
    j["com_x"] = fr.com_x;
    j["com_y"] = fr.com_y;
    j["x_l"] = fr.gait.x_l;
    j["y_l"] = fr.gait.y_l;
    j["x_r"] = fr.gait.x_r;
    j["y_r"] = fr.gait.y_r;
    j["phase"] = to_string(fr.gait.phase);
    j["label"] = to_string(fr.label);
    out << j.dump() << '\n';
  }
  for (const ComDetection& d : ep.com_detections) {
    nlohmann::json j;
    j["kind"] = "detection";
    j["t"] = d.t;
    j["qx"] = d.qx;
    j["qy"] = d.qy;
    out << j.dump() << '\n';
  }
  for (const GaitObservation& g : ep.gait_observations) {
    nlohmann::json j;
    j["kind"] = "gait";
    j["t"] = g.t;
    j["anchor_y"] = g.anchor_y;
    j["x_l"] = g.gait.x_l;
    j["y_l"] = g.gait.y_l;
    j["x_r"] = g.gait.x_r;
    j["y_r"] = g.gait.y_r;
    j["phase"] = to_string(g.gait.phase);
    out << j.dump() << '\n';
  }
  return out.str();
}

inline void write_episode_jsonl(const std::filesystem::path& path, const Episode& ep) {
  detail::write_file_atomic(path, episode_jsonl(ep));
}

inline Episode read_episode_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open episode file: " + path.string());
  Episode ep;
  bool have_meta = false;
  std::size_t want_frames = 0, want_detections = 0, want_gait = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "meta") {
      ep.subject_id = j.at("subject_id").get<int>();
      want_frames = j.at("frames").get<std::size_t>();
      want_detections = j.at("detections").get<std::size_t>();
      want_gait = j.at("gait_observations").get<std::size_t>();
      have_meta = true;
    } else if (kind == "frame") {
      TrajectoryFrame fr;
      fr.t = j.at("t").get<double>();
      fr.com_x = j.at("com_x").get<double>();
      fr.com_y = j.at("com_y").get<double>();
      fr.gait.x_l = j.at("x_l").get<double>();
      fr.gait.y_l = j.at("y_l").get<double>();
      fr.gait.x_r = j.at("x_r").get<double>();
      fr.gait.y_r = j.at("y_r").get<double>();
      fr.gait.phase = gait_phase_from_string(j.at("phase").get<std::string>());
      fr.label = stability_label_from_string(j.at("label").get<std::string>());
      ep.frames.push_back(fr);
    } else if (kind == "detection") {
      ep.com_detections.push_back(
          {j.at("t").get<double>(), j.at("qx").get<double>(), j.at("qy").get<double>()});
    } else if (kind == "gait") {
      GaitObservation g;
      g.t = j.at("t").get<double>();
      g.anchor_y = j.at("anchor_y").get<double>();
      g.gait.x_l = j.at("x_l").get<double>();
      g.gait.y_l = j.at("y_l").get<double>();
      g.gait.x_r = j.at("x_r").get<double>();
      g.gait.y_r = j.at("y_r").get<double>();
      g.gait.phase = gait_phase_from_string(j.at("phase").get<std::string>());
      ep.gait_observations.push_back(g);
    } else {
      throw std::runtime_error("unknown record kind in " + path.string() + ": " + kind);
    }
  }
  if (!have_meta) throw std::runtime_error("episode file missing meta line: " + path.string());
  if (ep.frames.size() != want_frames || ep.com_detections.size() != want_detections ||
      ep.gait_observations.size() != want_gait)
    throw std::runtime_error("episode file truncated: " + path.string());
  return ep;
}

inline constexpr const char* kCheckpointFormat = "gaitlab-model";
inline constexpr int kCheckpointVersion = 1;

inline void save_network_json(const std::filesystem::path& path, const NetworkParams& p) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["kind"] = "network";
  j["arch"] = arch_name(p.config);
  nlohmann::json cfg;
  cfg["input_dim"] = p.config.input_dim;
  cfg["hidden"] = p.config.hidden;
  cfg["lstm_layers"] = p.config.lstm_layers;
  cfg["use_encoder"] = p.config.use_encoder;
  cfg["dropout_prob"] = p.config.dropout_prob;
  cfg["bn_fc1"] = p.config.bn_fc1;
  cfg["bn_fc2"] = p.config.bn_fc2;
  cfg["bn_lstm"] = p.config.bn_lstm;
  cfg["output_dim"] = p.config.output_dim;
  j["config"] = cfg;
  nlohmann::json tensors;
  for_each_param(p, [&](const std::string& name, const MatrixXd& m) {
    tensors[name] = detail::matrix_to_json(m);
  });
  detail::for_each_running_stat(p, [&](const std::string& name, const MatrixXd& m) {
    tensors[name] = detail::matrix_to_json(m);
  });
  j["tensors"] = std::move(tensors);
  detail::write_file_atomic(path, j.dump());
}

inline NetworkParams load_network_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format").get<std::string>() != kCheckpointFormat ||
      j.at("kind").get<std::string>() != "network")
    throw std::runtime_error("not a network checkpoint: " + path.string());
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  const nlohmann::json& cfg = j.at("config");
  NetworkConfig c;
  c.input_dim = cfg.at("input_dim").get<int>();
  c.hidden = cfg.at("hidden").get<int>();
  c.lstm_layers = cfg.at("lstm_layers").get<int>();
  c.use_encoder = cfg.at("use_encoder").get<bool>();
  c.dropout_prob = cfg.at("dropout_prob").get<double>();
  c.bn_fc1 = cfg.at("bn_fc1").get<bool>();
  c.bn_fc2 = cfg.at("bn_fc2").get<bool>();
  c.bn_lstm = cfg.at("bn_lstm").get<bool>();
  c.output_dim = cfg.at("output_dim").get<int>();
  NetworkParams p = init_network(c, 0);
  const nlohmann::json& tensors = j.at("tensors");
  auto fill = [&](const std::string& name, auto& m) {
    const MatrixXd loaded = detail::matrix_from_json(tensors.at(name));
    if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
      throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
    m = loaded;
  };
  for_each_param(p, fill);
  detail::for_each_running_stat(p, fill);
  return p;
}

inline void save_svm_json(const std::filesystem::path& path, const SvmModel& model) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["kind"] = "svm";
  j["gamma"] = model.gamma;
  j["C"] = model.C;
  j["bias"] = model.bias;
  j["support"] = detail::matrix_to_json(model.support);
  j["coef"] = detail::matrix_to_json(model.coef);
  detail::write_file_atomic(path, j.dump());
}

inline SvmModel load_svm_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format").get<std::string>() != kCheckpointFormat ||
      j.at("kind").get<std::string>() != "svm")
    throw std::runtime_error("not an svm checkpoint: " + path.string());
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  SvmModel m;
  m.gamma = j.at("gamma").get<double>();
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.support = detail::matrix_from_json(j.at("support"));
  const MatrixXd coef = detail::matrix_from_json(j.at("coef"));
  if (coef.cols() != 1 || m.support.cols() != coef.rows())
    throw std::runtime_error("svm checkpoint shape mismatch: " + path.string());
  m.coef = coef;
  return m;
}

// Everything one run leaves on disk: metrics at the top, then per method and
// fold the ROC curve, raw scores, and the trained model.
inline void write_run_artifacts(const std::filesystem::path& run_dir, const RunConfig& cfg,
                                const ExperimentReport& rep) {
  namespace fs = std::filesystem;
  fs::create_directories(run_dir);
  detail::write_file_atomic(run_dir / "metrics.csv", metrics_csv(rep));
  for (const MethodReport& mr : rep.methods) {
    for (std::size_t k = 0; k < mr.folds.size(); ++k) {
      const fs::path fold_dir =
          run_dir / mr.method / ("fold-" + std::to_string(mr.folds[k].test_subject));
      detail::write_file_atomic(fold_dir / "roc.csv", roc_csv(mr.folds[k].roc));
      detail::write_file_atomic(fold_dir / "scores.csv",
                                scores_csv(mr.fold_scores[k], mr.fold_truth[k]));
      if (k < mr.nn_models.size())
        save_network_json(fold_dir / "model.json", mr.nn_models[k]);
      if (k < mr.svm_models.size()) save_svm_json(fold_dir / "model.json", mr.svm_models[k]);
    }
  }
  std::string summary;
  summary += "run: " + cfg.run_name + "\n";
  summary += "seed: " + std::to_string(cfg.seed) + "\n";
  summary += "subjects: " + std::to_string(cfg.subjects) + "\n";
  summary += "window: " + std::to_string(rep.window) +
             " (frames before index " + std::to_string(rep.scored_from) +
             " are warm-up and not scored)\n";
  for (const SubjectSummary& s : rep.subjects)
    summary += "subject " + std::to_string(s.subject_id) + ": " + std::to_string(s.ticks) +
               " ticks, fall-risk fraction " + fmt_double(s.stats.fall_risk_fraction) +
               ", raw rmse " + fmt_double(s.stats.raw_rmse) + " m, filtered rmse " +
               fmt_double(s.stats.filtered_rmse) + " m\n";
  for (const FoldTrainInfo& f : rep.folds)
    summary += "fold " + std::to_string(f.test_subject) + ": train frames " +
               std::to_string(f.train_frames_original) + " -> " +
               std::to_string(f.train_frames_total) + " after augmentation, fall-risk " +
               fmt_double(f.fr_fraction_original) + " -> " +
               fmt_double(f.fr_fraction_augmented) + ", windows " +
               std::to_string(f.train_windows) + "\n";
  detail::write_file_atomic(run_dir / "summary.txt", summary);
}

}  // namespace gaitlab
