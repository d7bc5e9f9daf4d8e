#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "prefforge/completion.hpp"

namespace prefforge {

enum class LossMethod { dpo, simpo, orpo };

std::string_view loss_method_name(LossMethod method);
LossMethod loss_method_from_name(std::string_view name);

struct LossSample {
  double logp_w_policy = 0.0;
  double logp_l_policy = 0.0;
  std::optional<double> logp_w_ref;  // required by DPO only
  std::optional<double> logp_l_ref;
  int len_w = 1;
  int len_l = 1;

  void validate() const;  // log-probabilities <= 0, lengths >= 1
};

struct LossConfig {
  LossMethod method = LossMethod::dpo;
  double beta = 0.1;
  double gamma = 0.0;   // SimPO margin
  double lambda = 1.0;  // ORPO weight

  void validate() const;
};

// Partials with respect to the four log-probability inputs.
struct LossGrad {
  double w_policy = 0.0;
  double l_policy = 0.0;
  double w_ref = 0.0;
  double l_ref = 0.0;
};

struct LossResult {
  double loss = 0.0;
  LossGrad grad;
  bool clamped = false;  // ORPO: a length-normalized probability hit 1
};

// -log sigma(z), via the overflow-free branch form.
double neg_log_sigmoid(double z);
double stable_sigmoid(double z);

// loss = -log sigma(beta * ((logp_w_policy - logp_w_ref) - (logp_l_policy - logp_l_ref)))
LossResult dpo_loss(const LossSample& sample, double beta);

// loss = -log sigma(beta * (logp_w_policy/len_w - logp_l_policy/len_l) - gamma)
LossResult simpo_loss(const LossSample& sample, double beta, double gamma);

// loss = -logp_w_policy/len_w + lambda * -log sigma(log(odds_w / odds_l))
// with odds(y) = P/(1-P), P = exp(logp/len) clamped below 1.
LossResult orpo_loss(const LossSample& sample, double lambda);

LossResult eval_loss(const LossSample& sample, const LossConfig& cfg);

// Arithmetic mean of per-sample losses and gradients; throws on empty input.
LossResult batch_loss(std::span<const LossSample> samples, const LossConfig& cfg);

// Central finite differences on each log-probability input present on the
// sample; returns max over inputs of |analytic - numeric| / max(|analytic|, 1e-12).
double grad_check(const LossSample& sample, const LossConfig& cfg, double step);

enum class SweepMethod { sft, dpo, orpo, simpo };

std::string_view sweep_method_name(SweepMethod method);

struct SweepConfig {
  SweepMethod method = SweepMethod::sft;
  double eta = 0.0;
  std::optional<double> beta;
  std::optional<double> gamma;
  Strategy strategy = Strategy::baseline;

  bool operator==(const SweepConfig&) const = default;
};

// The full hyperparameter grid crossed with the four data strategies:
// SFT 2 etas (8 runs), DPO 8 (eta, beta) rows (32), ORPO 3 etas (12),
// SimPO 6 (eta, beta, gamma) rows (24); 76 configurations total.
std::vector<SweepConfig> sweep_plan();

}  // namespace prefforge
