#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gaitlab/common.hpp"

namespace gaitlab {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

// Tallies hard predictions against ground truth; positive class is 1.
inline ConfusionCounts count_confusion(const std::vector<int>& predicted,
                                       const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("count_confusion: size mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0) {
      (predicted[i] != 0 ? c.tp : c.fn) += 1;
    } else {
      (predicted[i] != 0 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

struct Metrics {
  double precision = 0.0, recall = 0.0, fscore = 0.0, accuracy = 0.0;
};

inline Metrics metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0)
    throw std::invalid_argument("metrics: negative count");
  const std::int64_t total = c.total();
  if (total <= 0) throw std::invalid_argument("metrics: empty counts");
  Metrics m;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0)
    m.fscore = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  return m;
}

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0, tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Threshold sweep over the sorted unique scores, one curve point per distinct
// score (ties collapse into a single step), trapezoidal area. Labels are
// 0/1 with 1 the positive class.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
  if (scores.empty()) throw std::invalid_argument("roc_auc: empty input");
  std::int64_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw std::invalid_argument("roc_auc: non-finite score");
    (labels[i] == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    auc += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
    curve.points.push_back({s, fpr, tpr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  curve.auc = auc;
  return curve;
}

// Exact Mann-Whitney statistic: P(score+ > score-) + 0.5 P(tie), by brute
// force over all positive/negative pairs. Verification oracle for roc_auc.
inline double auc_pairwise_oracle(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc_pairwise_oracle: size mismatch");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty())
    throw std::invalid_argument("auc_pairwise_oracle: needs both classes");
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n)
        wins += 1.0;
      else if (p == n)
        wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct FoldSplit {
  int test_subject = 0;
  std::vector<int> train_subjects;
};

// Leave-one-subject-out: one fold per subject, ordered by subject id.
inline std::vector<FoldSplit> loocv_split(std::vector<int> subjects) {
  std::sort(subjects.begin(), subjects.end());
  if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end())
    throw std::invalid_argument("loocv_split: duplicate subject id");
  if (subjects.size() < 2) throw std::invalid_argument("loocv_split: needs at least 2 subjects");
  std::vector<FoldSplit> folds;
  folds.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    FoldSplit f;
    f.test_subject = subjects[i];
    for (std::size_t j = 0; j < subjects.size(); ++j)
      if (j != i) f.train_subjects.push_back(subjects[j]);
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace gaitlab
