#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "gaitlab/experiment.hpp"

using namespace gaitlab;

namespace {

SimConfig noiseless_sim() {
  SimConfig c;
  c.duration = 90.0;
  c.fall_risk_count = 3;
  c.camera_rate = c.lrf_rate;  // a CoM fix on every tick
  c.com_noise_x = 0.0;
  c.com_noise_y = 0.0;
  c.leg_noise = 0.0;
  c.detection_dropout_prob = 0.0;
  return c;
}

RunConfig small_run() {
  RunConfig cfg;
  cfg.run_name = "smoke";
  cfg.subjects = 2;
  cfg.sim.duration = 90.0;
  cfg.sim.fall_risk_count = 3;
  cfg.train.epochs = 1;
  cfg.eval.window = 50;
  cfg.eval.svm_max_train = 1000;
  cfg.methods = {"rule", "svm", "fc-lstm1-16"};
  return cfg;
}

}  // namespace

TEST_CASE("method tokens expand to concrete evaluations", "[experiment]") {
  const auto all = resolve_methods({"all"}, "");
  REQUIRE(all.size() == 4);
  CHECK(all[0].id == "rule");
  CHECK(all[1].id == "svm");
  CHECK(all[2].id == "lstm1-256");
  CHECK(all[3].id == "fc-lstm2-128");
  CHECK(all[2].kind == ResolvedMethod::Kind::Net);
  CHECK(all[2].net.use_encoder == false);
  CHECK(all[3].net.use_encoder == true);
  CHECK(all[3].net.lstm_layers == 2);
  CHECK(all[3].net.hidden == 128);

  const auto overridden = resolve_methods({"fc-lstm", "lstm"}, "fc-lstm2-256");
  REQUIRE(overridden.size() == 1);  // both aliases collapse onto the override
  CHECK(overridden[0].id == "fc-lstm2-256");
  CHECK(overridden[0].net.hidden == 256);

  const auto dedup = resolve_methods({"lstm1-256", "lstm", "rule", "rule"}, "");
  REQUIRE(dedup.size() == 2);
  CHECK(dedup[0].id == "lstm1-256");
  CHECK(dedup[1].id == "rule");

  CHECK_THROWS_AS(resolve_methods({"perceptron"}, ""), std::invalid_argument);
  CHECK_THROWS_AS(resolve_methods({}, ""), std::invalid_argument);
}

TEST_CASE("noiseless tick-rate camera closes the labeling loop", "[experiment]") {
  const SimConfig sim_cfg = noiseless_sim();
  const FootGeometry geom;
  const LabelThresholds th;
  const SubjectTrack track = build_track(sim_cfg, UkfConfig{}, geom, th, 1);

  for (const TickRecord& r : track.ticks) {
    CHECK(r.raw_qx == r.gt_com_x);
    CHECK(r.raw_qy == r.gt_com_y);
    CHECK(r.features(2) == r.gt_gait.x_l);
    const double anchor = sim_cfg.walk_speed * r.t + sim_cfg.robot_lead;
    CHECK(r.features(5) == r.gt_gait.y_r - anchor);
  }

  std::vector<double> scores;
  std::vector<int> preds;
  rule_baseline(track, geom, th, scores, preds);
  const std::vector<int> truth = track_labels(track);
  REQUIRE(preds.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    CHECK(preds[i] == truth[i]);
    // positive score exactly when the labeler calls the frame fall risk
    CHECK((scores[i] > 0.0) == (truth[i] == 1));
  }
}

TEST_CASE("rule-only experiment on noiseless data is perfect on every fold", "[experiment]") {
  RunConfig cfg = small_run();
  cfg.sim = noiseless_sim();
  cfg.methods = {"rule"};
  const ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.methods.size() == 1);
  REQUIRE(rep.methods[0].folds.size() == 2);
  for (const FoldReport& fr : rep.methods[0].folds) {
    CHECK(fr.metrics.accuracy == 1.0);
    CHECK(fr.metrics.fscore == 1.0);
    CHECK(fr.roc.auc == 1.0);
  }
  CHECK(rep.methods[0].mean_metrics.accuracy == 1.0);
  CHECK(rep.methods[0].mean_auc == 1.0);
}

TEST_CASE("small experiment produces a consistent report", "[experiment]") {
  const RunConfig cfg = small_run();
  const ExperimentReport rep = run_experiment(cfg);

  CHECK(rep.window == 50);
  CHECK(rep.scored_from == 49);
  REQUIRE(rep.subjects.size() == 2);
  CHECK(rep.subjects[0].subject_id == 1);
  CHECK(rep.subjects[0].ticks > 3000);
  // distinct per-subject seeds produce distinct walks
  CHECK(rep.subjects[0].stats.fall_risk_fraction != rep.subjects[1].stats.fall_risk_fraction);
  for (const SubjectSummary& s : rep.subjects) CHECK(s.stats.filtered_rmse < s.stats.raw_rmse);

  REQUIRE(rep.folds.size() == 2);
  for (std::size_t i = 0; i < rep.folds.size(); ++i) {
    const FoldTrainInfo& info = rep.folds[i];
    CHECK(info.test_subject == static_cast<int>(i) + 1);
    const std::size_t other = info.test_subject == 1 ? 1 : 0;
    CHECK(info.train_frames_original == rep.subjects[other].ticks);
    CHECK(info.train_frames_total == 2 * info.train_frames_original);
    CHECK(info.fr_fraction_augmented > info.fr_fraction_original);
    CHECK(info.train_windows > 100);
  }

  REQUIRE(rep.methods.size() == 3);
  CHECK(rep.methods[0].method == "rule");
  CHECK(rep.methods[1].method == "svm");
  CHECK(rep.methods[2].method == "fc-lstm1-16");
  CHECK(rep.methods[1].svm_models.size() == 2);
  CHECK(rep.methods[2].nn_models.size() == 2);
  CHECK(rep.methods[2].svm_models.empty());

  for (const MethodReport& mr : rep.methods) {
    REQUIRE(mr.folds.size() == 2);
    Metrics mean;
    double mean_auc = 0.0;
    for (const FoldReport& fr : mr.folds) {
      CHECK(fr.counts.total() ==
            static_cast<std::int64_t>(rep.subjects[static_cast<std::size_t>(fr.test_subject - 1)]
                                          .ticks) -
                rep.scored_from);
      CHECK(fr.roc.auc >= 0.0);
      CHECK(fr.roc.auc <= 1.0);
      mean.precision += fr.metrics.precision / 2.0;
      mean.recall += fr.metrics.recall / 2.0;
      mean.fscore += fr.metrics.fscore / 2.0;
      mean.accuracy += fr.metrics.accuracy / 2.0;
      mean_auc += fr.roc.auc / 2.0;
    }
    CHECK(std::abs(mr.mean_metrics.precision - mean.precision) < 1e-12);
    CHECK(std::abs(mr.mean_metrics.recall - mean.recall) < 1e-12);
    CHECK(std::abs(mr.mean_metrics.fscore - mean.fscore) < 1e-12);
    CHECK(std::abs(mr.mean_metrics.accuracy - mean.accuracy) < 1e-12);
    CHECK(std::abs(mr.mean_auc - mean_auc) < 1e-12);
    REQUIRE(mr.fold_scores.size() == 2);
    REQUIRE(mr.fold_truth.size() == 2);
    CHECK(mr.fold_scores[0].size() == mr.fold_truth[0].size());
  }

  SECTION("rerun is bit-identical") {
    const ExperimentReport again = run_experiment(cfg);
    for (std::size_t m = 0; m < rep.methods.size(); ++m) {
      CHECK(again.methods[m].mean_auc == rep.methods[m].mean_auc);
      CHECK(again.methods[m].mean_metrics.fscore == rep.methods[m].mean_metrics.fscore);
      CHECK(again.methods[m].fold_scores[0] == rep.methods[m].fold_scores[0]);
      CHECK(again.methods[m].fold_scores[1] == rep.methods[m].fold_scores[1]);
    }
  }
}

TEST_CASE("experiment rejects malformed configs", "[experiment]") {
  RunConfig cfg = small_run();
  cfg.subjects = 1;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_run();
  cfg.eval.window = 1;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_run();
  cfg.eval.window = 100000;  // longer than the whole stream
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}
