#pragma once

// Strongly convex quadratic test problems F(w) = 1/2 w'Aw - b'w with a
// Gaussian-noise stochastic gradient oracle. Every constant the convergence
// bounds need (L, c, w*, F*, the gradient-noise variance) is known exactly.

#include <cstdint>

#include <Eigen/Core>

#include "lpsgd/random.hpp"

namespace lpsgd {

class QuadraticProblem {
 public:
  /// Takes an explicit symmetric positive-definite matrix. L and c are the
  /// extreme eigenvalues of A.
  static QuadraticProblem from_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                      double sigma);

  Eigen::Index dim() const { return b_.size(); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& w_star() const { return w_star_; }
  double f_star() const { return f_star_; }
  /// Smoothness constant, lambda_max(A).
  double L() const { return L_; }
  /// Strong-convexity constant, lambda_min(A).
  double c() const { return c_; }

 private:
  friend QuadraticProblem make_quadratic(Eigen::Index, double, double, double, std::uint64_t);
  QuadraticProblem() = default;
  void finalize();

  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  double sigma_ = 0.0;
  Eigen::VectorXd w_star_;
  double f_star_ = 0.0;
  double L_ = 0.0;
  double c_ = 0.0;
};

/// A = Q' diag(lambda) Q with Q a seeded Haar-random orthogonal matrix and
/// lambda log-spaced from c to L inclusive; b is a seeded standard Gaussian.
/// The reported L and c are the requested values exactly.
QuadraticProblem make_quadratic(Eigen::Index d, double c, double L, double sigma,
                                std::uint64_t seed);

double objective(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w);

Eigen::VectorXd full_gradient(const QuadraticProblem& p,
                              const Eigen::Ref<const Eigen::VectorXd>& w);
void full_gradient_into(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w,
                        Eigen::Ref<Eigen::VectorXd> out);

/// grad F(w) + n, n ~ N(0, sigma^2 I). Consumes no randomness when sigma = 0.
Eigen::VectorXd stochastic_gradient(const QuadraticProblem& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& w, RandomSource& rng);
void stochastic_gradient_into(const QuadraticProblem& p,
                              const Eigen::Ref<const Eigen::VectorXd>& w, RandomSource& rng,
                              Eigen::Ref<Eigen::VectorXd> out);

/// F(w) - F*, evaluated as 1/2 (w-w*)'A(w-w*).
double gap(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w);

/// w* + s z with z a seeded standard Gaussian direction and s chosen so that
/// gap(w) equals `initial_gap` up to rounding.
Eigen::VectorXd point_at_gap(const QuadraticProblem& p, double initial_gap, std::uint64_t seed);

}  // namespace lpsgd
