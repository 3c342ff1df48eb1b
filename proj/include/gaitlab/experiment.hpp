#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gaitlab/dataset.hpp"
#include "gaitlab/eval.hpp"
#include "gaitlab/nn.hpp"
#include "gaitlab/stability.hpp"
#include "gaitlab/svm.hpp"

namespace gaitlab {

struct EvalConfig {
  int window = 100;
  int train_stride = 0;  // 0 picks window / 2
  double aug_sigma_x = 0.15;
  double aug_sigma_y = 0.20;
  int aug_copies = 1;
  int svm_max_train = 5000;  // per-fold cap on SVM training frames
};

inline void validate(const EvalConfig& c) {
  auto fail = [](const char* msg) {
    throw std::invalid_argument(std::string("EvalConfig: ") + msg);
  };
  if (c.window < 2) fail("window must be >= 2");
  if (c.train_stride < 0) fail("train_stride must be >= 0");
  if (c.aug_sigma_x < 0 || c.aug_sigma_y < 0) fail("augmentation noise must be >= 0");
  if (c.aug_copies < 0) fail("aug_copies must be >= 0");
  if (c.svm_max_train < 2) fail("svm_max_train must be >= 2");
}

// The benchmark trains far fewer epochs than the library default: Adam gets
// through the synthetic task in one full-rate epoch, and two annealed epochs
// settle the batch-norm statistics. Keeps the five-subject run inside a
// desktop half hour.
inline TrainConfig benchmark_train() {
  TrainConfig t;
  t.epochs = 3;
  return t;
}

// Everything one reproducible run needs. The defaults are the committed
// benchmark: five synthetic subjects, five minutes of walking each, all four
// method families, a single global seed fanning out to every random stream.
struct RunConfig {
  std::string run_name = "benchmark";
  std::uint64_t seed = 1;
  int subjects = 5;
  SimConfig sim;
  UkfConfig ukf;
  FootGeometry geom;
  LabelThresholds thresholds;
  TrainConfig train = benchmark_train();
  SvmConfig svm;
  EvalConfig eval;
  std::vector<std::string> methods = {"rule", "svm", "lstm", "fc-lstm"};
  std::string arch;  // optional override for the lstm / fc-lstm aliases
};

struct ResolvedMethod {
  enum class Kind { Rule, Svm, Net };
  std::string id;
  Kind kind = Kind::Rule;
  NetworkConfig net;  // meaningful only for Kind::Net
};

// Expands method tokens into concrete evaluations. "lstm" and "fc-lstm" are
// aliases for their Table III defaults unless an architecture override is
// given; explicit architecture names are accepted directly.
inline std::vector<ResolvedMethod> resolve_methods(const std::vector<std::string>& tokens,
                                                   const std::string& arch_override) {
  std::vector<std::string> expanded;
  for (const std::string& tok : tokens) {
    if (tok == "all") {
      expanded.insert(expanded.end(), {"rule", "svm", "lstm", "fc-lstm"});
    } else {
      expanded.push_back(tok);
    }
  }
  std::vector<ResolvedMethod> out;
  auto add = [&](ResolvedMethod m) {
    for (const auto& existing : out)
      if (existing.id == m.id) return;
    out.push_back(std::move(m));
  };
  for (const std::string& tok : expanded) {
    if (tok == "rule") {
      add({.id = "rule", .kind = ResolvedMethod::Kind::Rule, .net = {}});
    } else if (tok == "svm") {
      add({.id = "svm", .kind = ResolvedMethod::Kind::Svm, .net = {}});
    } else {
      std::string arch = tok;
      if (tok == "lstm") arch = arch_override.empty() ? "lstm1-256" : arch_override;
      if (tok == "fc-lstm") arch = arch_override.empty() ? "fc-lstm2-128" : arch_override;
      ResolvedMethod m;
      m.id = arch;
      m.kind = ResolvedMethod::Kind::Net;
      m.net = arch_from_name(arch);  // throws on unknown tokens
      add(std::move(m));
    }
  }
  if (out.empty()) throw std::invalid_argument("resolve_methods: no methods selected");
  return out;
}

// Geometric baseline on one track: margin of the latest raw CoM fix against
// the BoS built from the observed legs, thresholded exactly like the labeler.
// The score is threshold minus margin so larger means more fall risk.
inline void rule_baseline(const SubjectTrack& track, const FootGeometry& geom,
                          const LabelThresholds& th, std::vector<double>& scores,
                          std::vector<int>& preds) {
  std::vector<ComEstimate> com(track.ticks.size());
  std::vector<GaitObservation> obs(track.ticks.size());
  scores.resize(track.ticks.size());
  for (std::size_t i = 0; i < track.ticks.size(); ++i) {
    const TickRecord& r = track.ticks[i];
    com[i] = {r.t, r.raw_qx, r.raw_qy, false};
    const GaitState& g = r.raw_gait;
    obs[i] = {r.t, 0.0, g};
    const double margin =
        signed_margin(Vector2d(r.raw_qx, r.raw_qy), bos_from_gait_state(g, geom));
    const bool ds = g.phase == GaitPhase::LeftDS || g.phase == GaitPhase::RightDS;
    scores[i] = (ds ? th.theta_ds : th.theta_ss) - margin;
  }
  const std::vector<StabilityLabel> labels = rule_based_predict(com, obs, geom, th);
  preds.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    preds[i] = labels[i] == StabilityLabel::FallRisk ? 1 : 0;
}

struct FoldReport {
  int test_subject = 0;
  ConfusionCounts counts;
  Metrics metrics;
  RocCurve roc;
};

struct MethodReport {
  std::string method;
  std::vector<FoldReport> folds;
  Metrics mean_metrics;
  double mean_auc = 0.0;
  // Per-fold scores and truths on the scored test frames, for export.
  std::vector<std::vector<double>> fold_scores;
  std::vector<std::vector<int>> fold_truth;
  // Trained models, indexed like folds; filled for the matching kind only.
  std::vector<NetworkParams> nn_models;
  std::vector<SvmModel> svm_models;
};

struct SubjectSummary {
  int subject_id = 0;
  std::size_t ticks = 0;
  TrackStats stats;
};

struct FoldTrainInfo {
  int test_subject = 0;
  std::size_t train_frames_original = 0;
  std::size_t train_frames_total = 0;
  double fr_fraction_original = 0.0;
  double fr_fraction_augmented = 0.0;
  std::size_t train_windows = 0;
};

struct ExperimentReport {
  int window = 0;
  int scored_from = 0;  // first tick index with a full history window
  std::vector<SubjectSummary> subjects;
  std::vector<FoldTrainInfo> folds;
  std::vector<MethodReport> methods;
};

namespace detail {

// Stratified subsample without replacement, keeping class proportions and
// at least one sample of each class.
inline std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                                     std::size_t cap, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (labels.size() <= cap) {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.uniform_index(i)]);
  };
  shuffle(pos);
  shuffle(neg);
  std::size_t take_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(cap) * static_cast<double>(pos.size()) /
                   static_cast<double>(labels.size())));
  take_pos = std::clamp<std::size_t>(take_pos, pos.empty() ? 0 : 1,
                                     std::min(cap - 1, pos.size()));
  const std::size_t take_neg = std::min(neg.size(), cap - take_pos);
  std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(take_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(take_neg));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Full leave-one-subject-out comparison. Builds one track per subject plus
// its augmented copies, then per fold: feature statistics from the training
// tracks only, windows for the sequence models, frame sets for the SVM, and
// per-frame scoring on the untouched test subject. Frames without a full
// history window are excluded from scoring.
inline ExperimentReport run_experiment(const RunConfig& cfg) {
  validate(cfg.eval);
  validate(cfg.ukf);
  if (cfg.subjects < 2)
    throw std::invalid_argument("run_experiment: needs at least 2 subjects");
  const std::vector<ResolvedMethod> methods = resolve_methods(cfg.methods, cfg.arch);
  const int T = cfg.eval.window;
  const int stride = cfg.eval.train_stride > 0 ? cfg.eval.train_stride : std::max(1, T / 2);

  std::vector<int> ids(static_cast<std::size_t>(cfg.subjects));
  for (int s = 0; s < cfg.subjects; ++s) ids[static_cast<std::size_t>(s)] = s + 1;

  std::vector<SubjectTrack> originals;
  std::vector<std::vector<SubjectTrack>> copies(ids.size());
  originals.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SimConfig cs = cfg.sim;
    cs.rng_seed = derive_seed(cfg.seed, "subject", ids[i]);
    originals.push_back(build_track(cs, cfg.ukf, cfg.geom, cfg.thresholds, ids[i]));
    for (int k = 0; k < cfg.eval.aug_copies; ++k)
      copies[i].push_back(augment_track(originals[i], cfg.eval.aug_sigma_x,
                                        cfg.eval.aug_sigma_y,
                                        derive_seed(derive_seed(cfg.seed, "augment", ids[i]),
                                                    "copy", k),
                                        cfg.geom, cfg.thresholds));
  }

  ExperimentReport report;
  report.window = T;
  report.scored_from = T - 1;
  for (const SubjectTrack& tr : originals)
    report.subjects.push_back({tr.subject_id, tr.ticks.size(), tr.stats});

  report.methods.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) report.methods[m].method = methods[m].id;

  const std::vector<FoldSplit> folds = loocv_split(ids);
  for (std::size_t fold_idx = 0; fold_idx < folds.size(); ++fold_idx) {
    const FoldSplit& fold = folds[fold_idx];

    std::vector<const SubjectTrack*> train_tracks;
    std::size_t original_frames = 0;
    std::size_t original_fr = 0, total_fr = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == fold.test_subject) continue;
      train_tracks.push_back(&originals[i]);
      for (const SubjectTrack& c : copies[i]) train_tracks.push_back(&c);
      original_frames += originals[i].ticks.size();
    }
    std::size_t total_frames = 0;
    for (const SubjectTrack* tr : train_tracks) {
      total_frames += tr->ticks.size();
      for (const TickRecord& r : tr->ticks)
        (tr->augmented ? total_fr : original_fr) += r.label == StabilityLabel::FallRisk;
    }
    total_fr += original_fr;

    MatrixXd train_frames(kFeatureDim, static_cast<Eigen::Index>(total_frames));
    std::vector<int> train_labels;
    train_labels.reserve(total_frames);
    Eigen::Index col = 0;
    for (const SubjectTrack* tr : train_tracks) {
      const MatrixXd f = track_features(*tr);
      train_frames.middleCols(col, f.cols()) = f;
      col += f.cols();
      const std::vector<int> y = track_labels(*tr);
      train_labels.insert(train_labels.end(), y.begin(), y.end());
    }
    const FeatureStats stats = feature_stats(train_frames);
    const MatrixXd train_std = apply_stats(stats, train_frames);

    std::vector<WindowSample> windows;
    {
      Eigen::Index offset = 0;
      for (const SubjectTrack* tr : train_tracks) {
        const Eigen::Index n = static_cast<Eigen::Index>(tr->ticks.size());
        std::vector<WindowSample> w =
            windowize(train_std.middleCols(offset, n),
                      std::vector<int>(train_labels.begin() + offset,
                                       train_labels.begin() + offset + n),
                      T, stride, tr->subject_id);
        windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                       std::make_move_iterator(w.end()));
        offset += n;
      }
    }

    const SubjectTrack* test_track = nullptr;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == fold.test_subject) test_track = &originals[i];
    const MatrixXd test_std = apply_stats(stats, track_features(*test_track));
    const std::vector<int> truth = track_labels(*test_track);
    if (static_cast<int>(truth.size()) < T)
      throw std::invalid_argument("run_experiment: test stream shorter than one window");
    const std::size_t first = static_cast<std::size_t>(T - 1);
    const std::vector<int> truth_scored(truth.begin() + static_cast<std::ptrdiff_t>(first),
                                        truth.end());

    report.folds.push_back({fold.test_subject, original_frames, total_frames,
                            total_frames == 0 ? 0.0
                                              : static_cast<double>(original_fr) /
                                                    static_cast<double>(original_frames),
                            total_frames == 0 ? 0.0
                                              : static_cast<double>(total_fr) /
                                                    static_cast<double>(total_frames),
                            windows.size()});

    for (std::size_t m = 0; m < methods.size(); ++m) {
      const ResolvedMethod& method = methods[m];
      std::vector<double> scores;
      std::vector<int> preds;

      if (method.kind == ResolvedMethod::Kind::Rule) {
        std::vector<double> all_scores;
        std::vector<int> all_preds;
        rule_baseline(*test_track, cfg.geom, cfg.thresholds, all_scores, all_preds);
        scores.assign(all_scores.begin() + static_cast<std::ptrdiff_t>(first),
                      all_scores.end());
        preds.assign(all_preds.begin() + static_cast<std::ptrdiff_t>(first), all_preds.end());
      } else if (method.kind == ResolvedMethod::Kind::Svm) {
        Rng sub_rng(derive_seed(cfg.seed, "svm-sub", static_cast<int>(fold_idx)));
        const std::vector<std::size_t> keep = detail::stratified_subsample(
            train_labels, static_cast<std::size_t>(cfg.eval.svm_max_train), sub_rng);
        MatrixXd x(kFeatureDim, static_cast<Eigen::Index>(keep.size()));
        std::vector<int> y(keep.size());
        for (std::size_t i = 0; i < keep.size(); ++i) {
          x.col(static_cast<Eigen::Index>(i)) =
              train_std.col(static_cast<Eigen::Index>(keep[i]));
          y[i] = train_labels[keep[i]] == 1 ? 1 : -1;
        }
        const SvmModel model = smo_train(x, y, cfg.svm);
        const VectorXd sc = decision_scores(model, test_std);
        scores.resize(truth_scored.size());
        preds.resize(truth_scored.size());
        for (std::size_t i = 0; i < truth_scored.size(); ++i) {
          const double v = sc(static_cast<Eigen::Index>(first + i));
          scores[i] = v;
          preds[i] = v > 0.0 ? 1 : 0;
        }
        report.methods[m].svm_models.push_back(model);
      } else {
        TrainConfig tc = cfg.train;
        tc.rng_seed = derive_seed(derive_seed(cfg.seed, method.id), "fold",
                                  static_cast<int>(fold_idx));
        TrainResult trained = train(windows, method.net, tc);
        const VectorXd probs = predict_stream(trained.params, test_std, T);
        scores.resize(truth_scored.size());
        preds.resize(truth_scored.size());
        for (std::size_t i = 0; i < truth_scored.size(); ++i) {
          const double p = probs(static_cast<Eigen::Index>(first + i));
          scores[i] = p;
          preds[i] = p >= 0.5 ? 1 : 0;
        }
        report.methods[m].nn_models.push_back(std::move(trained.params));
      }

      FoldReport fr;
      fr.test_subject = fold.test_subject;
      fr.counts = count_confusion(preds, truth_scored);
      fr.metrics = metrics(fr.counts);
      fr.roc = roc_auc(scores, truth_scored);
      report.methods[m].fold_scores.push_back(std::move(scores));
      report.methods[m].fold_truth.push_back(truth_scored);
      report.methods[m].folds.push_back(std::move(fr));
    }
  }

  for (MethodReport& mr : report.methods) {
    const double n = static_cast<double>(mr.folds.size());
    for (const FoldReport& fr : mr.folds) {
      mr.mean_metrics.precision += fr.metrics.precision / n;
      mr.mean_metrics.recall += fr.metrics.recall / n;
      mr.mean_metrics.fscore += fr.metrics.fscore / n;
      mr.mean_metrics.accuracy += fr.metrics.accuracy / n;
      mr.mean_auc += fr.roc.auc / n;
    }
  }
  return report;
}

}  // namespace gaitlab
