#include "lpsgd/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpsgd/csv.hpp"
#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

// Draws the shrunk gradient for the current state and applies the update in
// place. Synthetic shrinkage keeps q_k and eps_k separate so that the true
// gradient is scaled by exactly alpha_k * q_k. Returns q_k.
class Stepper {
 public:
  Stepper(const ShrinkageModel& model, Eigen::Index d) : model_(model), eps_(d), g_tilde_(d) {}

  double apply(double alpha, const Eigen::VectorXd& g, Eigen::VectorXd& w, RandomSource& rng) {
    if (const auto* s = std::get_if<SyntheticShrinkage>(&model_.mode())) {
      const double q = draw_q(s->q_law, rng);
      draw_noise(s->sigma_eps_sq, eps_, rng);
      w.noalias() -= (alpha * q) * g + alpha * eps_;
      return q;
    }
    const auto& fq = std::get<FormatQuantization>(model_.mode());
    for (Eigen::Index i = 0; i < g.size(); ++i) g_tilde_[i] = quantize(g[i], fq.cfg);
    w.noalias() -= alpha * g_tilde_;
    const double gn = g.norm();
    return gn > 0.0 ? g_tilde_.norm() / gn : 1.0;
  }

 private:
  const ShrinkageModel& model_;
  Eigen::VectorXd eps_;
  Eigen::VectorXd g_tilde_;
};

}  // namespace

double stepsize_at(const StepsizeSchedule& s, std::int64_t k) {
  if (k < 1) throw InvalidInput("stepsize_at: iterations are numbered from 1");
  return std::visit(
      Overloaded{[](const FixedStep& f) { return f.alpha_bar; },
                 [k](const DiminishingStep& d) { return d.beta / (d.gamma + static_cast<double>(k)); },
                 [k](const HalvingStep& h) {
                   const auto passed = std::count_if(h.switch_iterations.begin(),
                                                     h.switch_iterations.end(),
                                                     [k](std::int64_t sw) { return sw <= k; });
                   return std::ldexp(h.alpha_1, -static_cast<int>(passed));
                 }},
      s);
}

ScheduleValidation validate_schedule(const StepsizeSchedule& s, const MomentConstants& mc) {
  ScheduleValidation out;
  try {
    mc.check();
  } catch (const InvalidHypothesis& e) {
    out.theorem = std::holds_alternative<DiminishingStep>(s) ? "diminishing-step" : "fixed-step";
    out.detail = std::string("moment constants: ") + e.what();
    return out;
  }
  const double limit = mc.max_stepsize();
  std::ostringstream msg;
  if (const auto* f = std::get_if<FixedStep>(&s)) {
    out.theorem = "fixed-step";
    out.passed = f->alpha_bar > 0.0 && f->alpha_bar <= limit;
    msg << "alpha_bar=" << format_double(f->alpha_bar) << (out.passed ? " <= " : " not in (0, ")
        << "mu_q/(L*M_tilde_G)=" << format_double(limit) << (out.passed ? "" : "]");
  } else if (const auto* h = std::get_if<HalvingStep>(&s)) {
    out.theorem = "fixed-step";
    const bool alpha_ok = h->alpha_1 > 0.0 && h->alpha_1 <= limit;
    const bool sorted = std::is_sorted(h->switch_iterations.begin(), h->switch_iterations.end());
    out.passed = alpha_ok && sorted;
    msg << "alpha_1=" << format_double(h->alpha_1) << (alpha_ok ? " <= " : " not in (0, ")
        << "mu_q/(L*M_tilde_G)=" << format_double(limit) << (alpha_ok ? "" : "]")
        << (sorted ? "" : "; switch iterations are not sorted");
  } else {
    const auto& d = std::get<DiminishingStep>(s);
    out.theorem = "diminishing-step";
    const double beta_min = 1.0 / (mc.c * mc.mu_q());
    const double alpha_1 = d.beta / (d.gamma + 1.0);
    const bool beta_ok = d.beta * mc.c * mc.mu_q() > 1.0;
    const bool alpha_ok = alpha_1 <= limit;
    const bool gamma_ok = d.gamma > 0.0;
    out.passed = beta_ok && alpha_ok && gamma_ok;
    msg << "beta=" << format_double(d.beta) << (beta_ok ? " > " : " not > ")
        << "1/(c*mu_q)=" << format_double(beta_min) << "; alpha_1=" << format_double(alpha_1)
        << (alpha_ok ? " <= " : " not <= ") << "mu_q/(L*M_tilde_G)=" << format_double(limit)
        << "; gamma=" << format_double(d.gamma) << (gamma_ok ? " > 0" : " not > 0");
  }
  out.detail = msg.str();
  return out;
}

Trajectory run(const QuadraticProblem& p, const StepsizeSchedule& s, const ShrinkageModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& w1, std::int64_t K, std::uint64_t seed) {
  if (w1.size() != p.dim()) throw DimensionMismatch("run: starting point has wrong dimension");
  if (K < 1) throw InvalidInput("run: K must be >= 1");

  RandomSource rng(seed);
  Stepper stepper(model, p.dim());
  Eigen::VectorXd w = w1;
  Eigen::VectorXd grad(p.dim());
  Eigen::VectorXd delta(p.dim());
  Eigen::VectorXd g(p.dim());

  Trajectory traj;
  traj.records.reserve(static_cast<std::size_t>(K));
  for (std::int64_t k = 1; k <= K; ++k) {
    delta = w - p.w_star();
    grad.noalias() = p.A() * delta;  // A w - b, anchored at w*
    const double gap_k = 0.5 * delta.dot(grad);
    if (!std::isfinite(gap_k))
      throw Divergence("run: iterate diverged at k=" + std::to_string(k), k - 1);

    TrajectoryRecord rec;
    rec.k = k;
    rec.gap = gap_k;
    rec.grad_norm_sq = grad.squaredNorm();
    rec.stepsize = stepsize_at(s, k);

    stochastic_gradient_into(p, w, rng, g);
    if (!g.allFinite())
      throw Divergence("run: gradient overflowed at k=" + std::to_string(k), k);
    rec.measured_q = stepper.apply(rec.stepsize, g, w, rng);
    traj.records.push_back(rec);
  }
  if (!w.allFinite()) throw Divergence("run: final iterate is not finite", K);
  traj.final_w = std::move(w);
  return traj;
}

OneStepEstimate one_step_expectation(const QuadraticProblem& p,
                                     const Eigen::Ref<const Eigen::VectorXd>& w, double alpha,
                                     const ShrinkageModel& model, std::int64_t n_samples,
                                     std::uint64_t seed) {
  if (w.size() != p.dim()) throw DimensionMismatch("one_step_expectation: wrong dimension");
  if (n_samples < 1000) throw InvalidInput("one_step_expectation: n_samples must be >= 1000");

  RandomSource rng(seed);
  Stepper stepper(model, p.dim());
  Eigen::VectorXd g(p.dim());
  Eigen::VectorXd next(p.dim());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 1; i <= n_samples; ++i) {
    stochastic_gradient_into(p, w, rng, g);
    next = w;
    stepper.apply(alpha, g, next, rng);
    const double f = objective(p, next);
    const double d = f - mean;
    mean += d / static_cast<double>(i);
    m2 += d * (f - mean);
  }
  const double n = static_cast<double>(n_samples);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

}  // namespace lpsgd
