#include "lpsgd/shrinkage.hpp"

#include <cmath>

#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

double SyntheticShrinkage::q_min() const {
  return std::visit(Overloaded{[](const ConstantQ& c) { return c.q; },
                               [](const UniformQ& u) { return u.q_min; }},
                    q_law);
}

double SyntheticShrinkage::q_max() const {
  return std::visit(Overloaded{[](const ConstantQ& c) { return c.q; },
                               [](const UniformQ& u) { return u.q_max; }},
                    q_law);
}

ShrinkageModel ShrinkageModel::synthetic(QLaw q_law, double sigma_eps_sq) {
  SyntheticShrinkage s{q_law, sigma_eps_sq};
  const double lo = s.q_min();
  const double hi = s.q_max();
  if (!(lo > 0.0 && lo <= hi && hi <= 1.0))
    throw InvalidInput("shrinkage factors must satisfy 0 < q_min <= q_max <= 1");
  if (!(sigma_eps_sq >= 0.0) || !std::isfinite(sigma_eps_sq))
    throw InvalidInput("sigma_eps_sq must be finite and >= 0");
  return ShrinkageModel(s);
}

ShrinkageModel ShrinkageModel::quantized(QuantizationConfig cfg) {
  return ShrinkageModel(FormatQuantization{std::move(cfg)});
}

const SyntheticShrinkage& ShrinkageModel::synthetic_params() const {
  if (const auto* s = std::get_if<SyntheticShrinkage>(&mode_)) return *s;
  throw ConstantsNotDerivable("shrinkage model is format quantization, not synthetic");
}

std::string ShrinkageModel::label() const {
  if (const auto* f = std::get_if<FormatQuantization>(&mode_)) return f->cfg.name();
  return "synthetic";
}

double measure_q(const Eigen::Ref<const Eigen::VectorXd>& g,
                 const Eigen::Ref<const Eigen::VectorXd>& g_tilde) {
  if (g.size() != g_tilde.size()) throw DimensionMismatch("measure_q: dimension mismatch");
  const double gn = g.norm();
  if (gn == 0.0) throw UndefinedRatio("measure_q: reference gradient has zero norm");
  return g_tilde.norm() / gn;
}

Decomposition decompose(const Eigen::Ref<const Eigen::VectorXd>& g,
                        const Eigen::Ref<const Eigen::VectorXd>& g_tilde) {
  if (g.size() != g_tilde.size()) throw DimensionMismatch("decompose: dimension mismatch");
  const double gg = g.squaredNorm();
  if (gg == 0.0) throw UndefinedRatio("decompose: reference gradient has zero norm");
  Decomposition out;
  out.q_hat = g.dot(g_tilde) / gg;
  out.eps = g_tilde - out.q_hat * g;
  return out;
}

double draw_q(const QLaw& law, RandomSource& rng) {
  return std::visit(Overloaded{[](const ConstantQ& c) { return c.q; },
                               [&rng](const UniformQ& u) { return rng.uniform(u.q_min, u.q_max); }},
                    law);
}

void draw_noise(double sigma_eps_sq, Eigen::Ref<Eigen::VectorXd> eps, RandomSource& rng) {
  if (sigma_eps_sq == 0.0) {
    eps.setZero();
    return;
  }
  const double sd = std::sqrt(sigma_eps_sq / static_cast<double>(eps.size()));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = sd * rng.normal();
}

ShrunkGradient sample_shrunk_gradient(const ShrinkageModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& g,
                                      RandomSource& rng) {
  ShrunkGradient out;
  if (const auto* fq = std::get_if<FormatQuantization>(&model.mode())) {
    out.g_tilde = quantize_vector(g, fq->cfg);
    out.observation.format = fq->cfg.name();
    // A zero gradient quantizes to zero; report it as unshrunk.
    if (g.squaredNorm() > 0.0) {
      const Decomposition parts = decompose(g, out.g_tilde);
      out.observation.q = measure_q(g, out.g_tilde);
      out.observation.eps_norm_sq = parts.eps.squaredNorm();
    }
    return out;
  }
  const auto& s = std::get<SyntheticShrinkage>(model.mode());
  const double q = draw_q(s.q_law, rng);
  Eigen::VectorXd eps(g.size());
  draw_noise(s.sigma_eps_sq, eps, rng);
  out.g_tilde = q * g + eps;
  out.observation = {q, eps.squaredNorm(), "synthetic"};
  return out;
}

}  // namespace lpsgd
