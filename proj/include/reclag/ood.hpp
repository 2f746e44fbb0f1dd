#pragma once

// Out-of-distribution scoring and detection metrics. Every scorer is oriented
// so that a higher score means "more in-distribution".

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reclag/core.hpp"
#include "reclag/dataset.hpp"
#include "reclag/energy.hpp"
#include "reclag/probability.hpp"

namespace reclag {

struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;

  void validate() const;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct DetectionMetrics {
  double fpr95 = 0.0;
  double auroc = 0.0;
  std::vector<RocPoint> roc;
  std::string scorer;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
};

/// Maximum softmax probability.
double msp_score(const VectorRef& logits);

/// Negative free energy log sum_c exp(logit_c).
double energy_score(const VectorRef& logits);

/// Linear classification head, logits = weights * features + bias.
struct LinearHead {
  Matrix weights;  ///< classes x features
  Vector bias;

  Vector apply(const VectorRef& features) const;
};

/// Least-squares recovery of a linear head from aligned features and logits.
LinearHead fit_linear_head(const Dataset& data);

/// energy_score(head(min(penultimate, clamp))).
double react_score(const VectorRef& penultimate, const LinearHead& head, double clamp);

/// The given percentile (in [0,1]) of all penultimate activations in `data`.
double activation_percentile(const Dataset& data, double percentile = 0.9);

/// FPR on OOD at the largest threshold whose TPR on ID is >= tpr_target.
/// Comparisons are inclusive (score >= threshold counts as ID).
double fpr_at_tpr(const ScoreSet& scores, double tpr_target);

/// ROC over all distinct thresholds with tied scores taken as one step, and
/// the trapezoidal AUC (equal to the Mann-Whitney statistic with half credit
/// for ties). fpr95 is filled in as well.
DetectionMetrics roc_and_auc(const ScoreSet& scores);

enum class ScorerKind { RecLag, Mhe, She, Msp, Energy, React };

ScorerKind parse_scorer(std::string_view name);
std::string_view scorer_name(ScorerKind kind);

struct Scorer {
  ScorerKind kind = ScorerKind::RecLag;
  std::optional<DensityModel> model;     ///< RecLag
  std::optional<ClassPatternBank> bank;  ///< MHE / SHE
  std::optional<LinearHead> head;        ///< ReAct
  double react_clamp = 0.0;
};

/// Scores every row of `data`. MHE/SHE use the class predicted by the logits
/// when present, otherwise the class with the highest score.
std::vector<double> score_dataset(const Scorer& scorer, const Dataset& data, unsigned threads = 1);

DetectionMetrics evaluate_detector(const Scorer& scorer, const Dataset& id_data, const Dataset& ood_data,
                                   unsigned threads = 1);

/// "scorer,dataset_pair,fpr95,auroc" header.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const DetectionMetrics& m, std::string_view dataset_pair);

/// "fpr,tpr" rows with a one-line header.
void write_roc_csv(std::ostream& out, const DetectionMetrics& m);

}  // namespace reclag
