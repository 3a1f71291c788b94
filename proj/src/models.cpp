#include "parisi/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "parisi/common/optim.hpp"
#include "parisi/errors.hpp"

namespace parisi {

SpinDistribution SpinDistribution::ising() {
  SpinDistribution s;
  s.kind = Kind::ising;
  s.dim = 1;
  s.values = {{-1.0}, {1.0}};
  s.weights = {0.5, 0.5};
  return s;
}

SpinDistribution SpinDistribution::atoms(std::vector<std::vector<double>> values,
                                         std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw ValidationError("spin distribution: need matching nonempty values and weights");
  const std::size_t dim = values.front().size();
  if (dim == 0) throw ValidationError("spin distribution: zero-dimensional atom");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != dim) throw ValidationError("spin distribution: ragged atoms");
    for (double v : values[i])
      if (!std::isfinite(v)) throw ValidationError("spin distribution: non-finite atom");
    if (!(weights[i] > 0.0)) throw ValidationError("spin distribution: weights must be positive");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("spin distribution: weights must sum to 1");
  SpinDistribution s;
  s.kind = Kind::atoms;
  s.dim = dim;
  s.values = std::move(values);
  s.weights = std::move(weights);
  return s;
}

SpinDistribution SpinDistribution::scalar_atoms(const std::vector<double>& values,
                                                std::vector<double> weights) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return atoms(std::move(rows), std::move(weights));
}

double SpinDistribution::max_sq_norm() const {
  double m = 0.0;
  for (const auto& v : values) {
    double s = 0.0;
    for (double c : v) s += c * c;
    m = std::max(m, s);
  }
  return m;
}

MixtureModel::MixtureModel(std::vector<PowerTerm> terms, std::size_t dim, SpinDistribution spins)
    : dim_(dim), spins_(std::move(spins)) {
  if (dim == 0) throw ValidationError("model: dim must be >= 1");
  if (spins_.dim != dim) throw ValidationError("model: spin dimension does not match dim");
  std::map<int, double> merged;
  for (const PowerTerm& t : terms) {
    if (t.degree < 1) throw ValidationError("model: degrees must be >= 1");
    if (!(t.coeff >= 0.0) || !std::isfinite(t.coeff))
      throw ValidationError("model: coefficients must be finite and >= 0");
    merged[t.degree] += t.coeff;
  }
  bool any_positive = false;
  for (const auto& [p, a] : merged) {
    terms_.push_back({p, a});
    any_positive = any_positive || a > 0.0;
  }
  if (!any_positive) throw ValidationError("model: at least one coefficient must be > 0");
}

MixtureModel MixtureModel::sk() { return MixtureModel({{2, 1.0}}); }

double MixtureModel::coeff(int degree) const {
  for (const PowerTerm& t : terms_)
    if (t.degree == degree) return t.coeff;
  return 0.0;
}

int MixtureModel::max_degree() const { return terms_.back().degree; }

bool MixtureModel::superlinear() const {
  for (const PowerTerm& t : terms_)
    if (t.degree >= 2 && t.coeff > 0.0) return true;
  return false;
}

double MixtureModel::xi(double r) const {
  double s = 0.0;
  for (const PowerTerm& t : terms_) s += t.coeff * std::pow(r, t.degree);
  return s;
}

double MixtureModel::xi_prime(double r) const {
  double s = 0.0;
  for (const PowerTerm& t : terms_) s += t.coeff * t.degree * std::pow(r, t.degree - 1);
  return s;
}

double MixtureModel::xi_second(double r) const {
  double s = 0.0;
  for (const PowerTerm& t : terms_)
    if (t.degree >= 2) s += t.coeff * t.degree * (t.degree - 1) * std::pow(r, t.degree - 2);
  return s;
}

double MixtureModel::theta(double x) const {
  double s = 0.0;
  for (const PowerTerm& t : terms_) s += t.coeff * (t.degree - 1) * std::pow(x, t.degree);
  return s;
}

double MixtureModel::xi(const Eigen::MatrixXd& r) const {
  double s = 0.0;
  for (const PowerTerm& t : terms_) s += t.coeff * r.array().pow(t.degree).sum();
  return s;
}

Eigen::MatrixXd MixtureModel::xi_grad(const Eigen::MatrixXd& r) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r.rows(), r.cols());
  for (const PowerTerm& t : terms_)
    g.array() += t.coeff * t.degree * r.array().pow(t.degree - 1);
  return g;
}

double MixtureModel::theta(const Eigen::MatrixXd& x) const {
  return (x.array() * xi_grad(x).array()).sum() - xi(x);
}

double MixtureModel::x_max(double t) const { return t * xi_prime(c2()); }

namespace {

// Root of xi'(b) = target on [lo, hi] with xi'(lo) < target <= xi'(hi):
// Newton steps, bisection whenever Newton leaves the bracket.
double solve_gradient(const MixtureModel& m, double target, double lo, double hi) {
  double b = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = m.xi_prime(b) - target;
    if (g == 0.0) return b;
    if (g < 0.0) lo = b;
    else hi = b;
    const double d = m.xi_second(b);
    double next = d > 0.0 ? b - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - b) <= 1e-15 * std::max(1.0, std::abs(b)) || hi - lo <= 1e-15 * std::max(1.0, hi))
      return next;
    b = next;
  }
  return b;
}

}  // namespace

ConjugateResult xi_star(const MixtureModel& model, double y, double t) {
  if (!(t > 0.0)) throw ValidationError("xi_star: t must be > 0");
  const double target = y / t;
  // g(b) = y b - t xi(b) is concave with g'(0) = y - t a_1.
  if (target <= model.xi_prime(0.0)) return {0.0, 0.0};
  if (!model.superlinear())
    throw DivergentConjugate("xi has no superlinear term and y/t exceeds a_1; sup is +inf");
  double hi = 10.0;
  while (model.xi_prime(hi) < target) {
    hi *= 2.0;
    if (hi > 1e150) throw DivergentConjugate("no finite stationary point in the working bracket");
  }
  double b = solve_gradient(model, target, 0.0, hi);
  double value = y * b - t * model.xi(b);
  if (!std::isfinite(value)) {
    auto r = optim::golden_max([&](double s) { return y * s - t * model.xi(s); }, 0.0, hi, 1e-12);
    b = r.x;
    value = r.value;
  }
  return {std::max(value, 0.0), b};
}

ConjugateResult xi_star_restricted(const MixtureModel& model, double y) {
  if (y <= model.xi_prime(0.0)) return {0.0, 0.0};
  if (y >= model.xi_prime(1.0)) return {y - model.xi(1.0), 1.0};
  const double b = solve_gradient(model, y, 0.0, 1.0);
  return {std::max(y * b - model.xi(b), 0.0), b};
}

MixtureModel perturb_alpha(const MixtureModel& model, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("perturb_alpha: alpha must be >= 0");
  std::vector<PowerTerm> terms = model.terms();
  if (alpha > 0.0) terms.push_back({2, alpha});
  return MixtureModel(std::move(terms), model.dim(), model.spins());
}

}  // namespace parisi
