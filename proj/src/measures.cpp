#include "parisi/measures.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "parisi/common/lp.hpp"
#include "parisi/errors.hpp"

namespace parisi {

namespace {

// Sorts by atom and merges atoms closer than kMergeTol. Merged atoms take the
// weighted mean position when the weights are positive, else the first one.
void sort_and_merge(std::vector<double>& atoms, std::vector<double>& weights, bool drop_zero) {
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  std::vector<double> xs, ws;
  std::size_t i = 0;
  while (i < order.size()) {
    const double first = atoms[order[i]];
    double w = 0.0, wx = 0.0, wabs = 0.0;
    std::size_t j = i;
    for (; j < order.size() && atoms[order[j]] - first <= DiscreteMeasure::kMergeTol; ++j) {
      w += weights[order[j]];
      wx += std::abs(weights[order[j]]) * atoms[order[j]];
      wabs += std::abs(weights[order[j]]);
    }
    const double last = atoms[order[j - 1]];
    const double x = wabs > 0.0 ? std::clamp(wx / wabs, first, last) : first;
    if (!(drop_zero && w == 0.0)) {
      xs.push_back(x);
      ws.push_back(w);
    }
    i = j;
  }
  atoms = std::move(xs);
  weights = std::move(ws);
}

}  // namespace

DiscreteMeasure::DiscreteMeasure() : atoms_{0.0}, weights_{1.0} {}

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw ValidationError("measure: need matching nonempty atoms and weights");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i]) || atoms[i] < -1e-14)
      throw ValidationError("measure: atoms must be finite and >= 0");
    atoms[i] = std::max(atoms[i], 0.0);
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw ValidationError("measure: weights must be finite and >= 0");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("measure: weights must sum to 1");
  std::vector<double> xs, ws;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (weights[i] > 0.0) {
      xs.push_back(atoms[i]);
      ws.push_back(weights[i]);
    }
  sort_and_merge(xs, ws, true);
  const double s = std::accumulate(ws.begin(), ws.end(), 0.0);
  for (double& w : ws) w /= s;
  atoms_ = std::move(xs);
  weights_ = std::move(ws);
}

DiscreteMeasure DiscreteMeasure::dirac(double q) { return DiscreteMeasure({q}, {1.0}); }

DiscreteMeasure DiscreteMeasure::from_path(const std::vector<double>& cuts, const std::vector<double>& q) {
  if (cuts.size() != q.size() + 1 || q.empty()) throw ValidationError("from_path: need |cuts| = |q| + 1");
  if (cuts.front() != 0.0 || cuts.back() != 1.0) throw ValidationError("from_path: cuts must run from 0 to 1");
  std::vector<double> w(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    w[k] = cuts[k + 1] - cuts[k];
    if (w[k] < 0.0) throw ValidationError("from_path: cuts must be nondecreasing");
    if (k > 0 && q[k] < q[k - 1]) throw ValidationError("from_path: path must be nondecreasing");
  }
  return DiscreteMeasure(q, w);
}

DiscreteMeasure DiscreteMeasure::mixture(const std::vector<std::pair<double, DiscreteMeasure>>& parts) {
  std::vector<double> xs, ws;
  for (const auto& [c, mu] : parts) {
    if (c < 0.0) throw ValidationError("mixture: negative coefficient");
    for (std::size_t i = 0; i < mu.size(); ++i) {
      xs.push_back(mu.atoms()[i]);
      ws.push_back(c * mu.weights()[i]);
    }
  }
  return DiscreteMeasure(std::move(xs), std::move(ws));
}

std::vector<double> DiscreteMeasure::cuts() const {
  std::vector<double> z(atoms_.size() + 1, 0.0);
  for (std::size_t k = 0; k < atoms_.size(); ++k) z[k + 1] = z[k] + weights_[k];
  z.back() = 1.0;
  return z;
}

double DiscreteMeasure::quantile(double u) const {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < atoms_.size(); ++k) {
    acc += weights_[k];
    if (u < acc) return atoms_[k];
  }
  return atoms_.back();
}

double DiscreteMeasure::integrate(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < atoms_.size(); ++k) s += weights_[k] * f(atoms_[k]);
  return s;
}

double DiscreteMeasure::mean() const {
  return integrate([](double x) { return x; });
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& a, double tol) { return min_eigenvalue(a) >= -tol; }

bool psd_leq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double tol) { return is_psd(y - x, tol); }

MatrixAtomsMeasure::MatrixAtomsMeasure(std::vector<Eigen::MatrixXd> a, std::vector<double> w)
    : atoms(std::move(a)), weights(std::move(w)) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw ValidationError("matrix measure: need matching nonempty atoms and weights");
  const auto d = atoms.front().rows();
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Eigen::MatrixXd& x = atoms[i];
    if (x.rows() != d || x.cols() != d) throw ValidationError("matrix measure: atoms must be square of equal size");
    if ((x - x.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw ValidationError("matrix measure: atoms must be symmetric");
    if (!is_psd(x)) throw ValidationError("matrix measure: atoms must be PSD");
    if (!(weights[i] >= 0.0)) throw ValidationError("matrix measure: weights must be >= 0");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("matrix measure: weights must sum to 1");
  for (double& w : weights) w /= total;
}

MatrixAtomsMeasure MatrixAtomsMeasure::from_scalar(const DiscreteMeasure& mu) {
  std::vector<Eigen::MatrixXd> a;
  for (double x : mu.atoms()) a.push_back(Eigen::MatrixXd::Constant(1, 1, x));
  return MatrixAtomsMeasure(std::move(a), mu.weights());
}

double MatrixAtomsMeasure::integrate(const std::function<double(const Eigen::MatrixXd&)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) s += weights[i] * f(atoms[i]);
  return s;
}

SignedAtoms::SignedAtoms(std::vector<double> a, std::vector<double> w) : atoms(std::move(a)), weights(std::move(w)) {
  if (atoms.size() != weights.size()) throw ValidationError("signed atoms: size mismatch");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i]) || atoms[i] < 0.0) throw ValidationError("signed atoms: atoms must be >= 0");
    if (!std::isfinite(weights[i])) throw ValidationError("signed atoms: non-finite weight");
  }
  sort_and_merge(atoms, weights, true);
}

SignedAtoms SignedAtoms::difference(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> a = mu.atoms(), w = mu.weights();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    a.push_back(nu.atoms()[i]);
    w.push_back(-nu.weights()[i]);
  }
  return SignedAtoms(std::move(a), std::move(w));
}

double SignedAtoms::total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

namespace {

std::vector<double> merged_cuts(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<double> u = mu.cuts();
  const std::vector<double> v = nu.cuts();
  u.insert(u.end(), v.begin(), v.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

}  // namespace

double w1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const std::vector<double> u = merged_cuts(mu, nu);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double mid = 0.5 * (u[i] + u[i + 1]);
    s += (u[i + 1] - u[i]) * std::abs(mu.quantile(mid) - nu.quantile(mid));
  }
  return s;
}

double transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                      const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t n = a.size(), m = b.size();
  lp::Problem prob(n * m);
  std::vector<double> c(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = cost(i, j);
  prob.set_objective(std::move(c), false);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t j = 0; j < m; ++j) row.push_back({i * m + j, 1.0});
    prob.add_sparse_row(row, lp::Sense::eq, a[i]);
  }
  // The last column constraint is implied by the others.
  for (std::size_t j = 0; j + 1 < m; ++j) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) row.push_back({i * m + j, 1.0});
    prob.add_sparse_row(row, lp::Sense::eq, b[j]);
  }
  const lp::Solution sol = prob.solve();
  if (sol.status != lp::Status::optimal)
    throw LpFailure(std::string("transport LP: ") + lp::to_string(sol.status));
  return sol.objective;
}

double w1_distance(const MatrixAtomsMeasure& mu, const MatrixAtomsMeasure& nu) {
  return transport_cost(mu.weights, nu.weights, [&](std::size_t i, std::size_t j) {
    return (mu.atoms[i] - nu.atoms[j]).norm();
  });
}

double kr_norm(const SignedAtoms& nu) {
  // Node 0 is the reference point; atoms within the merge tolerance of 0 sit on it.
  std::vector<double> nodes{0.0};
  std::vector<double> mass{0.0};
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
    if (nu.atoms[i] <= DiscreteMeasure::kMergeTol) {
      mass[0] += nu.weights[i];
    } else {
      nodes.push_back(nu.atoms[i]);
      mass.push_back(nu.weights[i]);
    }
  }
  const std::size_t n = nodes.size();
  lp::Problem prob(n);
  for (std::size_t k = 0; k < n; ++k) prob.set_free(k);
  prob.set_objective(mass, true);
  prob.add_sparse_row({{0, 1.0}}, lp::Sense::le, 1.0);
  prob.add_sparse_row({{0, -1.0}}, lp::Sense::le, 1.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double d = nodes[k] - nodes[k - 1];
    prob.add_sparse_row({{k, 1.0}, {k - 1, -1.0}}, lp::Sense::le, d);
    prob.add_sparse_row({{k, -1.0}, {k - 1, 1.0}}, lp::Sense::le, d);
  }
  const lp::Solution sol = prob.solve();
  if (sol.status != lp::Status::optimal) throw LpFailure(std::string("KR LP: ") + lp::to_string(sol.status));
  return sol.objective;
}

double kr_norm_closed_form(const SignedAtoms& nu) {
  double tail = nu.total_mass();
  double s = std::abs(tail);
  double prev = 0.0;
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
    s += (nu.atoms[i] - prev) * std::abs(tail);
    tail -= nu.weights[i];
    prev = nu.atoms[i];
  }
  return s;
}

double kr_norm(const std::vector<Eigen::MatrixXd>& atoms, const std::vector<double>& weights) {
  if (atoms.size() != weights.size()) throw ValidationError("kr_norm: size mismatch");
  const std::size_t n = atoms.size() + 1;
  std::vector<Eigen::MatrixXd> nodes;
  if (!atoms.empty()) nodes.push_back(Eigen::MatrixXd::Zero(atoms.front().rows(), atoms.front().cols()));
  else return 0.0;
  nodes.insert(nodes.end(), atoms.begin(), atoms.end());
  lp::Problem prob(n);
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < atoms.size(); ++i) c[i + 1] = weights[i];
  for (std::size_t k = 0; k < n; ++k) prob.set_free(k);
  prob.set_objective(std::move(c), true);
  prob.add_sparse_row({{0, 1.0}}, lp::Sense::le, 1.0);
  prob.add_sparse_row({{0, -1.0}}, lp::Sense::le, 1.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = (nodes[a] - nodes[b]).norm();
      prob.add_sparse_row({{a, 1.0}, {b, -1.0}}, lp::Sense::le, d);
      prob.add_sparse_row({{a, -1.0}, {b, 1.0}}, lp::Sense::le, d);
    }
  const lp::Solution sol = prob.solve();
  if (sol.status != lp::Status::optimal) throw LpFailure(std::string("KR LP: ") + lp::to_string(sol.status));
  return sol.objective;
}

bool measure_leq(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const std::vector<double> u = merged_cuts(mu, nu);
  double tail = 0.0;
  for (std::size_t i = u.size() - 1; i-- > 0;) {
    const double mid = 0.5 * (u[i] + u[i + 1]);
    tail += (u[i + 1] - u[i]) * (nu.quantile(mid) - mu.quantile(mid));
    if (tail < -1e-12) return false;
  }
  return true;
}

bool is_monotone_support(const MatrixAtomsMeasure& mu) {
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    for (std::size_t j = i + 1; j < mu.atoms.size(); ++j)
      if (!psd_leq(mu.atoms[i], mu.atoms[j]) && !psd_leq(mu.atoms[j], mu.atoms[i])) return false;
  return true;
}

}  // namespace parisi
