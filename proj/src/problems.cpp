#include "lpsgd/problems.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

void check_dim(const QuadraticProblem& p, Eigen::Index n, const char* op) {
  if (n != p.dim())
    throw DimensionMismatch(std::string(op) + ": expected dimension " + std::to_string(p.dim()) +
                            ", got " + std::to_string(n));
}

}  // namespace

void QuadraticProblem::finalize() {
  Eigen::LLT<Eigen::MatrixXd> llt(A_);
  if (llt.info() != Eigen::Success) throw InvalidInput("quadratic: A is not positive definite");
  w_star_ = llt.solve(b_);
  f_star_ = -0.5 * b_.dot(w_star_);
}

QuadraticProblem QuadraticProblem::from_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                               double sigma) {
  if (A.rows() != A.cols() || A.rows() != b.size() || b.size() < 1)
    throw DimensionMismatch("quadratic: A must be square and match b");
  if (!(sigma >= 0.0)) throw InvalidInput("quadratic: sigma must be >= 0");
  if ((A - A.transpose()).norm() > 1e-12 * A.norm())
    throw InvalidInput("quadratic: A is not symmetric");
  QuadraticProblem p;
  p.A_ = 0.5 * (A + A.transpose());
  p.b_ = b;
  p.sigma_ = sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.A_, Eigen::EigenvaluesOnly);
  p.c_ = eig.eigenvalues().minCoeff();
  p.L_ = eig.eigenvalues().maxCoeff();
  if (!(p.c_ > 0.0)) throw InvalidInput("quadratic: A is not positive definite");
  p.finalize();
  return p;
}

QuadraticProblem make_quadratic(Eigen::Index d, double c, double L, double sigma,
                                std::uint64_t seed) {
  if (d < 1) throw InvalidInput("make_quadratic: dimension must be >= 1");
  if (!(c > 0.0) || !(L >= c) || !std::isfinite(L))
    throw InvalidInput("make_quadratic: require 0 < c <= L");
  if (d == 1 && c != L) throw InfeasibleSpectrum("make_quadratic: d = 1 requires c = L");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidInput("make_quadratic: sigma must be finite and >= 0");

  RandomSource rng(seed);
  Eigen::MatrixXd G(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  // Sign correction makes Q Haar-distributed.
  const auto R = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;

  Eigen::VectorXd lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    lambda[i] = c * std::pow(L / c, t);
  }
  lambda[0] = c;
  lambda[d - 1] = L;

  QuadraticProblem p;
  const Eigen::MatrixXd A = Q.transpose() * lambda.asDiagonal() * Q;
  p.A_ = 0.5 * (A + A.transpose());
  p.b_.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) p.b_[i] = rng.normal();
  p.sigma_ = sigma;
  p.c_ = c;
  p.L_ = L;
  p.finalize();
  return p;
}

double objective(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w) {
  check_dim(p, w.size(), "objective");
  return 0.5 * w.dot(p.A() * w) - p.b().dot(w);
}

void full_gradient_into(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w,
                        Eigen::Ref<Eigen::VectorXd> out) {
  check_dim(p, w.size(), "full_gradient");
  out.noalias() = p.A() * w;
  out -= p.b();
}

Eigen::VectorXd full_gradient(const QuadraticProblem& p,
                              const Eigen::Ref<const Eigen::VectorXd>& w) {
  Eigen::VectorXd g(p.dim());
  full_gradient_into(p, w, g);
  return g;
}

void stochastic_gradient_into(const QuadraticProblem& p,
                              const Eigen::Ref<const Eigen::VectorXd>& w, RandomSource& rng,
                              Eigen::Ref<Eigen::VectorXd> out) {
  full_gradient_into(p, w, out);
  if (p.sigma() == 0.0) return;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += p.sigma() * rng.normal();
}

Eigen::VectorXd stochastic_gradient(const QuadraticProblem& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& w, RandomSource& rng) {
  Eigen::VectorXd g(p.dim());
  stochastic_gradient_into(p, w, rng, g);
  return g;
}

double gap(const QuadraticProblem& p, const Eigen::Ref<const Eigen::VectorXd>& w) {
  check_dim(p, w.size(), "gap");
  const Eigen::VectorXd delta = w - p.w_star();
  return 0.5 * delta.dot(p.A() * delta);
}

Eigen::VectorXd point_at_gap(const QuadraticProblem& p, double initial_gap, std::uint64_t seed) {
  if (!(initial_gap >= 0.0) || !std::isfinite(initial_gap))
    throw InvalidInput("initial gap must be finite and >= 0");
  RandomSource rng(seed);
  Eigen::VectorXd z(p.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const double unit_gap = 0.5 * z.dot(p.A() * z);
  return p.w_star() + std::sqrt(initial_gap / unit_gap) * z;
}

}  // namespace lpsgd
