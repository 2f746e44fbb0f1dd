#include "reclag/ood.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include "reclag/parallel.hpp"

namespace reclag {

void ScoreSet::validate() const {
  detail::require(!id_scores.empty() && !ood_scores.empty(), "score sets must both be nonempty");
  auto finite = [](const std::vector<double>& s) {
    return std::all_of(s.begin(), s.end(), [](double x) { return std::isfinite(x); });
  };
  detail::require(finite(id_scores) && finite(ood_scores), "scores must be finite");
}

double msp_score(const VectorRef& logits) {
  detail::require(logits.size() > 0, "msp of empty logits");
  return softmax(logits).maxCoeff();
}

double energy_score(const VectorRef& logits) {
  detail::require(logits.size() > 0, "energy of empty logits");
  return stable_log_sum_exp(logits);
}

Vector LinearHead::apply(const VectorRef& features) const {
  detail::require_dim(features.size(), weights.cols(), "head input");
  return weights * features + bias;
}

LinearHead fit_linear_head(const Dataset& data) {
  detail::require(data.logits.has_value(), "fitting a linear head needs logits");
  detail::require(data.size() > data.dim(), "fitting a linear head needs more samples than features");
  Matrix design(data.size(), data.dim() + 1);
  design.leftCols(data.dim()) = data.features;
  design.col(data.dim()).setOnes();
  const Matrix coef = design.colPivHouseholderQr().solve(*data.logits);  // (dim+1) x classes
  LinearHead head;
  head.weights = coef.topRows(data.dim()).transpose();
  head.bias = coef.row(data.dim()).transpose();
  return head;
}

double react_score(const VectorRef& penultimate, const LinearHead& head, double clamp) {
  detail::require(clamp > 0.0, "react clamp must be positive");
  detail::require_dim(head.bias.size(), head.weights.rows(), "head bias");
  const Vector clipped = penultimate.cwiseMin(clamp);
  return energy_score(head.apply(clipped));
}

double activation_percentile(const Dataset& data, double percentile) {
  detail::require(!data.empty(), "percentile of an empty dataset");
  detail::require(percentile >= 0.0 && percentile <= 1.0, "percentile must lie in [0, 1]");
  std::vector<double> values(data.features.data(), data.features.data() + data.features.size());
  std::sort(values.begin(), values.end());
  const double pos = percentile * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double fpr_at_tpr(const ScoreSet& scores, double tpr_target) {
  scores.validate();
  detail::require(tpr_target > 0.0 && tpr_target <= 1.0, "tpr target must lie in (0, 1]");
  std::vector<double> id = scores.id_scores;
  std::sort(id.begin(), id.end(), std::greater<>());
  const double n_id = static_cast<double>(id.size());
  std::size_t k = 1;
  while (static_cast<double>(k) / n_id < tpr_target) ++k;
  const double threshold = id[k - 1];
  const auto false_pos = std::count_if(scores.ood_scores.begin(), scores.ood_scores.end(),
                                       [&](double s) { return s >= threshold; });
  return static_cast<double>(false_pos) / static_cast<double>(scores.ood_scores.size());
}

DetectionMetrics roc_and_auc(const ScoreSet& scores) {
  scores.validate();
  struct Labeled {
    double score;
    bool id;
  };
  std::vector<Labeled> all;
  all.reserve(scores.id_scores.size() + scores.ood_scores.size());
  for (double s : scores.id_scores) all.push_back({s, true});
  for (double s : scores.ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) { return a.score > b.score; });

  const auto n_id = static_cast<std::uint64_t>(scores.id_scores.size());
  const auto n_ood = static_cast<std::uint64_t>(scores.ood_scores.size());
  DetectionMetrics m;
  m.n_id = scores.id_scores.size();
  m.n_ood = scores.ood_scores.size();
  m.roc.push_back({0.0, 0.0});

  // Twice the trapezoid area in units of 1/(n_id n_ood), kept integral so the
  // result is exactly the Mann-Whitney count.
  std::uint64_t twice_area = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::uint64_t group_tp = 0;
    std::uint64_t group_fp = 0;
    const double s = all[i].score;
    for (; i < all.size() && all[i].score == s; ++i) (all[i].id ? group_tp : group_fp) += 1;
    twice_area += group_fp * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    m.roc.push_back({static_cast<double>(fp) / static_cast<double>(n_ood),
                     static_cast<double>(tp) / static_cast<double>(n_id)});
  }
  m.auroc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(n_id) * static_cast<double>(n_ood));
  m.fpr95 = fpr_at_tpr(scores, 0.95);
  return m;
}

ScorerKind parse_scorer(std::string_view name) {
  if (name == "reclag") return ScorerKind::RecLag;
  if (name == "mhe") return ScorerKind::Mhe;
  if (name == "she") return ScorerKind::She;
  if (name == "msp") return ScorerKind::Msp;
  if (name == "energy") return ScorerKind::Energy;
  if (name == "react") return ScorerKind::React;
  throw InvalidArgument(fmt::format("unknown scorer '{}'", name));
}

std::string_view scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::RecLag:
      return "reclag";
    case ScorerKind::Mhe:
      return "mhe";
    case ScorerKind::She:
      return "she";
    case ScorerKind::Msp:
      return "msp";
    case ScorerKind::Energy:
      return "energy";
    case ScorerKind::React:
      return "react";
  }
  return "unknown";
}

namespace {

bool needs_logits(ScorerKind kind) {
  return kind == ScorerKind::Msp || kind == ScorerKind::Energy;
}

// -MHE for MHE (energy, lower is ID); SHE as defined is already higher-is-ID.
double bank_score(ScorerKind kind, const ClassPatternBank& bank, std::size_t c, const Vector& x) {
  return kind == ScorerKind::Mhe ? -mhe_score(bank, c, x) : she_score(bank, c, x);
}

}  // namespace

std::vector<double> score_dataset(const Scorer& scorer, const Dataset& data, unsigned threads) {
  data.validate();
  if (needs_logits(scorer.kind) && !data.logits) {
    throw InvalidArgument(fmt::format("scorer '{}' needs logits but the dataset has none", scorer_name(scorer.kind)));
  }
  if (scorer.kind == ScorerKind::RecLag) detail::require(scorer.model.has_value(), "reclag scorer needs a model");
  if (scorer.kind == ScorerKind::Mhe || scorer.kind == ScorerKind::She) {
    detail::require(scorer.bank.has_value(), "mhe/she scorers need a class pattern bank");
  }
  if (scorer.kind == ScorerKind::React) detail::require(scorer.head.has_value(), "react scorer needs a linear head");

  std::vector<double> out(static_cast<std::size_t>(data.size()));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector x = data.sample(row);
    double s = 0.0;
    switch (scorer.kind) {
      case ScorerKind::RecLag:
        s = ood_score(*scorer.model, scorer.model->prepare(x));
        break;
      case ScorerKind::Mhe:
      case ScorerKind::She: {
        const auto& bank = *scorer.bank;
        if (data.logits) {
          Eigen::Index c = 0;
          data.logits->row(row).maxCoeff(&c);
          s = bank_score(scorer.kind, bank, static_cast<std::size_t>(c), x);
        } else {
          s = -std::numeric_limits<double>::infinity();
          for (std::size_t c = 0; c < bank.n_classes(); ++c) s = std::max(s, bank_score(scorer.kind, bank, c, x));
        }
        break;
      }
      case ScorerKind::Msp:
        s = msp_score(data.logits->row(row).transpose());
        break;
      case ScorerKind::Energy:
        s = energy_score(data.logits->row(row).transpose());
        break;
      case ScorerKind::React:
        s = react_score(x, *scorer.head, scorer.react_clamp);
        break;
    }
    out[i] = s;
  });
  return out;
}

DetectionMetrics evaluate_detector(const Scorer& scorer, const Dataset& id_data, const Dataset& ood_data,
                                   unsigned threads) {
  ScoreSet scores{score_dataset(scorer, id_data, threads), score_dataset(scorer, ood_data, threads)};
  DetectionMetrics m = roc_and_auc(scores);
  m.scorer = std::string(scorer_name(scorer.kind));
  return m;
}

void write_metrics_header(std::ostream& out) { out << "scorer,dataset_pair,fpr95,auroc\n"; }

void write_metrics_row(std::ostream& out, const DetectionMetrics& m, std::string_view dataset_pair) {
  fmt::print(out, "{},{},{},{}\n", m.scorer, dataset_pair, m.fpr95, m.auroc);
}

void write_roc_csv(std::ostream& out, const DetectionMetrics& m) {
  out << "fpr,tpr\n";
  for (const auto& p : m.roc) fmt::print(out, "{},{}\n", p.fpr, p.tpr);
}

}  // namespace reclag
