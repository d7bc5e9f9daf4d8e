#include "prefforge/prefloss.hpp"

#include <cmath>
#include <stdexcept>

namespace prefforge {

std::string_view loss_method_name(LossMethod method) {
  switch (method) {
    case LossMethod::dpo: return "dpo";
    case LossMethod::simpo: return "simpo";
    case LossMethod::orpo: return "orpo";
  }
  return "dpo";
}

LossMethod loss_method_from_name(std::string_view name) {
  if (name == "dpo") return LossMethod::dpo;
  if (name == "simpo") return LossMethod::simpo;
  if (name == "orpo") return LossMethod::orpo;
  throw std::invalid_argument("unknown loss method: " + std::string(name));
}

void LossSample::validate() const {
  if (logp_w_policy > 0 || logp_l_policy > 0) {
    throw std::invalid_argument("policy log-probabilities must be <= 0");
  }
  if ((logp_w_ref && *logp_w_ref > 0) || (logp_l_ref && *logp_l_ref > 0)) {
    throw std::invalid_argument("reference log-probabilities must be <= 0");
  }
  if (len_w < 1 || len_l < 1) throw std::invalid_argument("lengths must be >= 1");
}

void LossConfig::validate() const {
  if (beta <= 0) throw std::invalid_argument("beta must be > 0");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
}

double neg_log_sigmoid(double z) {
  // -log sigma(z) = max(-z, 0) + log1p(exp(-|z|)); no overflow for |z| > 700.
  return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double stable_sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

LossResult dpo_loss(const LossSample& sample, double beta) {
  sample.validate();
  if (!sample.logp_w_ref || !sample.logp_l_ref) {
    throw std::invalid_argument("dpo_loss requires reference log-probabilities");
  }
  double r_w = sample.logp_w_policy - *sample.logp_w_ref;
  double r_l = sample.logp_l_policy - *sample.logp_l_ref;
  double z = beta * (r_w - r_l);
  double g = stable_sigmoid(-z);

  LossResult result;
  result.loss = neg_log_sigmoid(z);
  result.grad.w_policy = -beta * g;
  result.grad.l_policy = beta * g;
  result.grad.w_ref = beta * g;
  result.grad.l_ref = -beta * g;
  return result;
}

LossResult simpo_loss(const LossSample& sample, double beta, double gamma) {
  sample.validate();
  double s_w = sample.logp_w_policy / sample.len_w;
  double s_l = sample.logp_l_policy / sample.len_l;
  double z = beta * (s_w - s_l) - gamma;
  double g = stable_sigmoid(-z);

  LossResult result;
  result.loss = neg_log_sigmoid(z);
  result.grad.w_policy = -beta * g / sample.len_w;
  result.grad.l_policy = beta * g / sample.len_l;
  return result;
}

LossResult orpo_loss(const LossSample& sample, double lambda) {
  sample.validate();
  constexpr double kMaxP = 1.0 - 1e-12;
  double s_w = sample.logp_w_policy / sample.len_w;
  double s_l = sample.logp_l_policy / sample.len_l;

  LossResult result;
  double p_w = std::exp(s_w);
  double p_l = std::exp(s_l);
  if (p_w >= 1.0) {
    p_w = kMaxP;
    result.clamped = true;
  }
  if (p_l >= 1.0) {
    p_l = kMaxP;
    result.clamped = true;
  }
  // log odds(y) = s - log(1 - P); z is the log odds ratio.
  double z = (std::log(p_w) - std::log1p(-p_w)) - (std::log(p_l) - std::log1p(-p_l));
  double g = stable_sigmoid(-z);

  result.loss = -s_w + lambda * neg_log_sigmoid(z);
  result.grad.w_policy = (-1.0 - lambda * g / (1.0 - p_w)) / sample.len_w;
  result.grad.l_policy = (lambda * g / (1.0 - p_l)) / sample.len_l;
  return result;
}

LossResult eval_loss(const LossSample& sample, const LossConfig& cfg) {
  switch (cfg.method) {
    case LossMethod::dpo: return dpo_loss(sample, cfg.beta);
    case LossMethod::simpo: return simpo_loss(sample, cfg.beta, cfg.gamma);
    case LossMethod::orpo: return orpo_loss(sample, cfg.lambda);
  }
  throw std::invalid_argument("unknown loss method");
}

LossResult batch_loss(std::span<const LossSample> samples, const LossConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("batch_loss: empty batch");
  LossResult mean;
  for (const auto& sample : samples) {
    LossResult one = eval_loss(sample, cfg);
    mean.loss += one.loss;
    mean.grad.w_policy += one.grad.w_policy;
    mean.grad.l_policy += one.grad.l_policy;
    mean.grad.w_ref += one.grad.w_ref;
    mean.grad.l_ref += one.grad.l_ref;
    mean.clamped = mean.clamped || one.clamped;
  }
  double n = static_cast<double>(samples.size());
  mean.loss /= n;
  mean.grad.w_policy /= n;
  mean.grad.l_policy /= n;
  mean.grad.w_ref /= n;
  mean.grad.l_ref /= n;
  return mean;
}

double grad_check(const LossSample& sample, const LossConfig& cfg, double step) {
  if (step <= 0) throw std::invalid_argument("grad_check: step must be > 0");

  struct Input {
    double LossSample::* direct;
    std::optional<double> LossSample::* ref;
    double LossGrad::* grad;
  };
  // The four log-probability inputs; reference slots are checked only when
  // present on the sample.
  const Input inputs[] = {
      {&LossSample::logp_w_policy, nullptr, &LossGrad::w_policy},
      {&LossSample::logp_l_policy, nullptr, &LossGrad::l_policy},
      {nullptr, &LossSample::logp_w_ref, &LossGrad::w_ref},
      {nullptr, &LossSample::logp_l_ref, &LossGrad::l_ref},
  };

  LossResult base = eval_loss(sample, cfg);
  double max_rel = 0.0;
  for (const auto& input : inputs) {
    LossSample plus = sample;
    LossSample minus = sample;
    if (input.direct) {
      plus.*(input.direct) += step;
      minus.*(input.direct) -= step;
    } else {
      if (!(sample.*(input.ref))) continue;
      *(plus.*(input.ref)) += step;
      *(minus.*(input.ref)) -= step;
    }
    double numeric = (eval_loss(plus, cfg).loss - eval_loss(minus, cfg).loss) / (2.0 * step);
    double analytic = base.grad.*(input.grad);
    double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-12);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::string_view sweep_method_name(SweepMethod method) {
  switch (method) {
    case SweepMethod::sft: return "sft";
    case SweepMethod::dpo: return "dpo";
    case SweepMethod::orpo: return "orpo";
    case SweepMethod::simpo: return "simpo";
  }
  return "sft";
}

std::vector<SweepConfig> sweep_plan() {
  const Strategy strategies[] = {Strategy::baseline, Strategy::cot, Strategy::mcts, Strategy::dts};

  const double sft_etas[] = {1e-5, 3e-5};
  const std::pair<double, double> dpo_rows[] = {
      {7e-7, 0.01}, {5e-7, 0.01}, {3e-7, 0.01}, {1e-7, 0.01},
      {3e-7, 0.05}, {1e-7, 0.05}, {3e-7, 0.1},  {1e-7, 0.1},
  };
  const double orpo_etas[] = {5e-7, 2e-7, 7e-8};
  const std::tuple<double, double, double> simpo_rows[] = {
      {1e-6, 10.0, 0.3},  {8e-7, 10.0, 0.3},  {5e-7, 10.0, 0.3},
      {8e-7, 10.0, 0.5},  {1e-6, 2.5, 0.55},  {8e-7, 2.5, 0.55},
  };

  std::vector<SweepConfig> plan;
  plan.reserve(76);
  for (double eta : sft_etas) {
    for (Strategy s : strategies) plan.push_back({SweepMethod::sft, eta, {}, {}, s});
  }
  for (auto [eta, beta] : dpo_rows) {
    for (Strategy s : strategies) plan.push_back({SweepMethod::dpo, eta, beta, {}, s});
  }
  for (double eta : orpo_etas) {
    for (Strategy s : strategies) plan.push_back({SweepMethod::orpo, eta, {}, {}, s});
  }
  for (auto [eta, beta, gamma] : simpo_rows) {
    for (Strategy s : strategies) plan.push_back({SweepMethod::simpo, eta, beta, gamma, s});
  }
  return plan;
}

}  // namespace prefforge
