#include "parisi/hopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parisi/common/optim.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"

namespace parisi {

// ---------------------------------------------------------------- PLConvexFn

PLConvexFn::PLConvexFn() : PLConvexFn({0.0, 1.0}, {0.0}) {}

PLConvexFn::PLConvexFn(std::vector<double> knots, std::vector<double> slopes)
    : knots_(std::move(knots)), slopes_(std::move(slopes)) {
  if (knots_.size() < 2 || slopes_.size() + 1 != knots_.size())
    throw ValidationError("PLConvexFn: need m >= 1 pieces and m + 1 knots");
  if (knots_.front() != 0.0) throw ValidationError("PLConvexFn: first knot must be 0");
  for (std::size_t k = 1; k < knots_.size(); ++k)
    if (!(knots_[k] > knots_[k - 1]) || !std::isfinite(knots_[k]))
      throw ValidationError("PLConvexFn: knots must be strictly increasing");
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    double& s = slopes_[k];
    if (!std::isfinite(s) || s < -1e-12 || s > 1.0 + 1e-12) throw ValidationError("PLConvexFn: slopes must lie in [0, 1]");
    s = std::clamp(s, 0.0, 1.0);
    if (k > 0) {
      if (s < slopes_[k - 1] - 1e-12) throw ValidationError("PLConvexFn: slopes must be nondecreasing");
      s = std::max(s, slopes_[k - 1]);
    }
  }
  values_.assign(knots_.size(), 0.0);
  for (std::size_t k = 1; k < knots_.size(); ++k)
    values_[k] = values_[k - 1] + slopes_[k - 1] * (knots_[k] - knots_[k - 1]);
}

PLConvexFn PLConvexFn::linear(double slope, double x_end) { return PLConvexFn({0.0, x_end}, {slope}); }

PLConvexFn PLConvexFn::from_increments(std::vector<double> knots, const std::vector<double>& increments) {
  std::vector<double> s(increments.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    if (increments[k] < 0.0) throw ValidationError("PLConvexFn: increments must be >= 0");
    acc += increments[k];
    s[k] = std::min(acc, 1.0);
  }
  return PLConvexFn(std::move(knots), std::move(s));
}

PLConvexFn PLConvexFn::from_values(std::vector<double> knots, const std::vector<double>& values) {
  if (values.size() != knots.size() || knots.size() < 2) throw ValidationError("PLConvexFn: value/knot mismatch");
  if (std::abs(values.front()) > 1e-12) throw ValidationError("PLConvexFn: chi(0) must be 0");
  std::vector<double> s(knots.size() - 1);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) s[k] = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
  return PLConvexFn(std::move(knots), std::move(s));
}

double PLConvexFn::slope_right_of(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.end()) return slopes_.back();
  const std::size_t k = static_cast<std::size_t>(it - knots_.begin());
  return slopes_[k - 1];
}

double PLConvexFn::operator()(double x) const {
  if (x < 0.0) throw ValidationError("PLConvexFn: evaluated at a negative point");
  if (x >= knots_.back()) return values_.back() + slopes_.back() * (x - knots_.back());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return values_[k] + slopes_[k] * (x - knots_[k]);
}

double PLConvexFn::integrate(const DiscreteMeasure& mu) const {
  return mu.integrate([this](double x) { return (*this)(x); });
}

// --------------------------------------------------------------- PLConjugate

PLConjugate::PLConjugate(const PLConvexFn& chi) {
  const auto& xs = chi.knots();
  const auto& vs = chi.values();
  auto sup_at = [&](double y) {
    double best = 0.0;  // x = 0
    for (std::size_t i = 1; i < xs.size(); ++i) best = std::max(best, xs[i] * y - vs[i]);
    return best;
  };
  breaks_.push_back(0.0);
  for (double s : chi.slopes())
    if (s > breaks_.back()) breaks_.push_back(s);
  for (double y : breaks_) values_.push_back(sup_at(y));
}

double PLConjugate::operator()(double y) const {
  if (y <= 0.0) return 0.0;
  if (y > domain_max()) throw ValidationError("chi* evaluated outside its domain");
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
  if (it == breaks_.end()) return values_.back();
  const std::size_t k = static_cast<std::size_t>(it - breaks_.begin());
  const double w = (y - breaks_[k - 1]) / (breaks_[k] - breaks_[k - 1]);
  return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

double PLConjugate::biconjugate(double x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < breaks_.size(); ++k) best = std::max(best, x * breaks_[k] - values_[k]);
  return best;
}

PLConjugate pl_conjugate(const PLConvexFn& chi) { return PLConjugate(chi); }

// ------------------------------------------------------------------ HopfLax

HopfLax::HopfLax(const MixtureModel& model, double t) : model_(model), t_(t) {
  if (!(t >= 0.0)) throw ValidationError("S_t: t must be >= 0");
  if (t == 0.0) return;
  if (!model.superlinear()) {
    // Penalty is 0 up to t a_1 and +inf beyond.
    window_ = t * model.xi_prime(0.0);
    return;
  }
  // Smallest y > 0 with t xi*(y/t) >= y; the gain chi(x+y) - chi(x) <= y
  // cannot beat the penalty past it. Doubled for safety.
  auto f = [&](double y) { return xi_star(model, y, t).value - y; };
  double hi = std::max(t, 1e-3);
  while (f(hi) < 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  window_ = 2.0 * hi;
}

double HopfLax::penalty(double y) const { return xi_star(model_, y, t_).value; }

SupResult s_t_sup(const HopfLax& op, const PLConvexFn& chi, double x) {
  if (x < 0.0) throw ValidationError("S_t: x must be >= 0");
  if (op.t() == 0.0) return {chi(x), 0.0};
  const MixtureModel& model = op.model();
  const double t = op.t();
  const double Y = op.window();

  // Breakpoints of y -> chi(x + y) inside [0, Y].
  std::vector<double> cuts{0.0};
  for (double k : chi.knots())
    if (k - x > 0.0 && k - x < Y) cuts.push_back(k - x);
  cuts.push_back(Y);

  auto g = [&](double y) { return chi(x + y) - op.penalty(y); };
  // d/dy of the penalty is the conjugate's argmax b*(y).
  auto slope_pen = [&](double y) { return xi_star(model, y, t).argmax; };

  SupResult best{g(0.0), 0.0};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    const double s = chi.slope_right_of(x + 0.5 * (a + b));
    double y;
    if (s - slope_pen(a) <= 0.0) {
      y = a;
    } else if (s - slope_pen(b) >= 0.0) {
      y = b;
    } else {
      y = optim::golden_max(g, a, b, 1e-12 * std::max(1.0, b)).x;
    }
    const double v = g(y);
    if (v > best.value) best = {v, y};
    const double vb = g(b);
    if (vb > best.value) best = {vb, b};
  }
  return best;
}

SupResult s_t_sup(const MixtureModel& model, const PLConvexFn& chi, double t, double x) {
  return s_t_sup(HopfLax(model, t), chi, x);
}

SupResult s_t_hopf(const MixtureModel& model, const PLConjugate& conj, double t, double x) {
  if (!(t >= 0.0)) throw ValidationError("S_t: t must be >= 0");
  // The objective is convex on each linear piece of chi*: endpoints suffice.
  const auto& ys = conj.breakpoints();
  const auto& vs = conj.break_values();
  SupResult best{-std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double v = x * ys[k] - vs[k] + t * model.xi(ys[k]);
    if (v > best.value) best = {v, ys[k]};
  }
  return best;
}

SupResult s_t_hopf(const MixtureModel& model, const PLConvexFn& chi, double t, double x) {
  return s_t_hopf(model, PLConjugate(chi), t, x);
}

SupResult tilde_s_t(const std::function<double(double)>& chi, const MixtureModel& model, double t, double x,
                    const std::vector<double>& directions, bool refine) {
  if (directions.empty()) throw EmptyDirections("no directions supplied");
  if (t == 0.0) return {chi(x), 0.0};
  if (!(t > 0.0)) throw ValidationError("tilde S_t: t must be >= 0");
  std::vector<double> ys = directions;
  for (double y : ys)
    if (y < 0.0 || y > 1.0) throw ValidationError("tilde S_t: directions must lie in [0, 1]");
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  auto h = [&](double y) { return chi(x + t * model.xi_prime(y)) - t * model.theta(y); };
  std::size_t best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double v = h(ys[i]);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  SupResult res{best, ys[best_i]};
  if (refine) {
    if (best_i > 0) {
      auto r = optim::golden_max(h, ys[best_i - 1], ys[best_i], 1e-13);
      if (r.value > res.value) res = {r.value, r.x};
    }
    if (best_i + 1 < ys.size()) {
      auto r = optim::golden_max(h, ys[best_i], ys[best_i + 1], 1e-13);
      if (r.value > res.value) res = {r.value, r.x};
    }
  }
  return res;
}

SupResult tilde_s_t(const PLConvexFn& chi, const MixtureModel& model, double t, double x,
                    const std::vector<double>& directions) {
  std::vector<double> ys = directions;
  if (t > 0.0) {
    // y with t xi'(y) = knot - x: between consecutive such points the
    // objective is unimodal.
    for (double k : chi.knots()) {
      const double z = k - x;
      if (z <= t * model.xi_prime(0.0) || z >= t * model.xi_prime(1.0)) continue;
      ys.push_back(xi_star(model, z, t).argmax);
    }
  }
  return tilde_s_t([&](double v) { return chi(v); }, model, t, x, ys, true);
}

MatrixSupResult tilde_s_t(const std::function<double(const Eigen::MatrixXd&)>& chi, const MixtureModel& model,
                          double t, const Eigen::MatrixXd& x, const std::vector<Eigen::MatrixXd>& directions) {
  if (directions.empty()) throw EmptyDirections("no directions supplied");
  if (!(t >= 0.0)) throw ValidationError("tilde S_t: t must be >= 0");
  if (t == 0.0) return {chi(x), 0};
  MatrixSupResult best{-std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const Eigen::MatrixXd& y = directions[i];
    if (!is_psd(y) || y.norm() > 1.0 + 1e-12)
      throw ValidationError("tilde S_t: directions must be PSD with norm <= 1");
    const double v = chi(x + t * model.xi_grad(y)) - t * model.theta(y);
    if (v > best.value) best = {v, i};
  }
  return best;
}

// --------------------------------------------------------------------- paths

Path::Path(std::vector<PathSegment> segments) : segs_(std::move(segments)) {
  if (segs_.empty()) throw ValidationError("path: no segments");
  if (segs_.front().u0 != 0.0 || segs_.back().u1 != 1.0) throw ValidationError("path: must cover [0, 1)");
  for (std::size_t i = 0; i < segs_.size(); ++i) {
    if (!(segs_[i].u1 > segs_[i].u0)) throw ValidationError("path: empty segment");
    if (i > 0 && segs_[i].u0 != segs_[i - 1].u1) throw ValidationError("path: segments must be contiguous");
  }
}

Path Path::step(const std::vector<double>& cuts, const std::vector<double>& values) {
  if (cuts.size() != values.size() + 1) throw ValidationError("step path: need |cuts| = |values| + 1");
  std::vector<PathSegment> s;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (cuts[i + 1] > cuts[i]) s.push_back({cuts[i], cuts[i + 1], values[i], 0.0});
  return Path(std::move(s));
}

Path Path::linear(double a, double b) { return Path({{0.0, 1.0, a, b}}); }

Path Path::from_measure(const DiscreteMeasure& mu) { return step(mu.cuts(), mu.atoms()); }

double Path::operator()(double u) const {
  for (const auto& s : segs_)
    if (u < s.u1) return s.a + s.b * u;
  return segs_.back().a + segs_.back().b * u;
}

bool FinitePath::nondecreasing() const {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i] < x[i - 1]) return false;
  return true;
}

Path lift(const FinitePath& x) {
  const std::size_t j = x.j();
  if (j == 0) throw ValidationError("lift: empty path");
  std::vector<PathSegment> s;
  for (std::size_t i = 0; i < j; ++i)
    s.push_back({static_cast<double>(i) / j, i + 1 == j ? 1.0 : static_cast<double>(i + 1) / j, x.x[i], 0.0});
  return Path(std::move(s));
}

namespace {

// Integral over [lo, hi] of (a + b u)(c + d u).
double poly_product_integral(double a, double b, double c, double d, double lo, double hi) {
  const double p0 = a * c, p1 = a * d + b * c, p2 = b * d;
  auto F = [&](double u) { return u * (p0 + u * (p1 / 2.0 + u * p2 / 3.0)); };
  return F(hi) - F(lo);
}

// Sorted union of the breakpoints of both paths.
std::vector<double> common_grid(const Path& p, const Path& q) {
  std::vector<double> g{0.0};
  for (const auto& s : p.segments()) g.push_back(s.u1);
  for (const auto& s : q.segments()) g.push_back(s.u1);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

const PathSegment& segment_at(const Path& p, double mid) {
  for (const auto& s : p.segments())
    if (mid < s.u1) return s;
  return p.segments().back();
}

}  // namespace

FinitePath project(std::size_t j, const Path& q) {
  if (j == 0) throw ValidationError("project: j must be >= 1");
  FinitePath out;
  out.x.resize(j);
  for (std::size_t i = 0; i < j; ++i) {
    const double lo = static_cast<double>(i) / j, hi = i + 1 == j ? 1.0 : static_cast<double>(i + 1) / j;
    double acc = 0.0;
    bool inside = false;
    for (const auto& s : q.segments()) {
      if (s.u0 <= lo && hi <= s.u1) {
        // One segment covers the cell: its mean is the midpoint value.
        out.x[i] = s.b == 0.0 ? s.a : s.a + s.b * 0.5 * (lo + hi);
        inside = true;
        break;
      }
      const double a = std::max(lo, s.u0), b = std::min(hi, s.u1);
      if (b > a) acc += poly_product_integral(s.a, s.b, 1.0, 0.0, a, b);
    }
    if (!inside) out.x[i] = acc / (hi - lo);
  }
  return out;
}

double pairing_l2(const Path& p, const Path& q) {
  const auto g = common_grid(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double mid = 0.5 * (g[i] + g[i + 1]);
    const auto& a = segment_at(p, mid);
    const auto& b = segment_at(q, mid);
    s += poly_product_integral(a.a, a.b, b.a, b.b, g[i], g[i + 1]);
  }
  return s;
}

double pairing_j(const FinitePath& x, const FinitePath& y) {
  if (x.j() != y.j()) throw ValidationError("pairing_j: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.j(); ++i) s += x.x[i] * y.x[i];
  return s / static_cast<double>(x.j());
}

double l1_distance(const Path& p, const Path& q) {
  const auto g = common_grid(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double lo = g[i], hi = g[i + 1], mid = 0.5 * (lo + hi);
    const auto& a = segment_at(p, mid);
    const auto& b = segment_at(q, mid);
    // Difference c + d u is linear: split at its root if inside.
    const double c = a.a - b.a, d = a.b - b.b;
    auto abs_int = [&](double l, double h) {
      const double v = 0.5 * (c + d * l + c + d * h) * (h - l);
      return std::abs(v);
    };
    if (d != 0.0) {
      const double r = -c / d;
      if (r > lo && r < hi) {
        s += abs_int(lo, r) + abs_int(r, hi);
        continue;
      }
    }
    s += abs_int(lo, hi);
  }
  return s;
}

HjFiniteResult hj_finite_dim(const MixtureModel& model, const PLConvexFn& chi, double t, const FinitePath& x) {
  const std::size_t j = x.j();
  if (j == 0) throw ValidationError("hj_finite_dim: empty path");
  if (!x.nondecreasing()) throw ValidationError("hj_finite_dim: path must be nondecreasing");
  for (double v : x.x)
    if (v < 0.0) throw ValidationError("hj_finite_dim: path must be >= 0");
  const double jd = static_cast<double>(j);

  HjFiniteResult r;
  const HopfLax op(model, t);
  double sep = 0.0;
  for (double xi : x.x) sep += s_t_sup(op, chi, xi).value;
  r.separable = sep / jd;

  // Euclidean form: sup_w sum_i x_i w_i - phi*(w) + t H_j(w) with
  // phi*(w) = (1/j) sum chi*(j w_i), H_j(w) = (1/j) sum xi(j w_i). Each
  // coordinate is convex on the pieces of chi*(j .): check the breakpoints.
  const PLConjugate conj(chi);
  double hopf = 0.0;
  for (double xi : x.x) {
    double best = -std::numeric_limits<double>::infinity();
    const auto& ys = conj.breakpoints();
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const double w = ys[k] / jd;
      best = std::max(best, xi * w - conj.break_values()[k] / jd + t * model.xi(ys[k]) / jd);
    }
    hopf += best;
  }
  r.hopf = hopf;
  r.value = r.separable;
  if (std::abs(r.separable - r.hopf) > 1e-8)
    throw SeparabilityViolation("separable and Hopf forms differ by " + std::to_string(r.separable - r.hopf));
  return r;
}

OrderWitness find_order_violation(const std::function<double(double)>& chi, double x_hi, std::size_t trials,
                                  std::uint64_t seed) {
  OrderWitness w;
  w.excess = -std::numeric_limits<double>::infinity();
  rng::Stream rs(seed, 0x0de3ULL);
  auto random_measure = [&](std::size_t max_atoms) {
    const std::size_t n = 1 + rs.below(max_atoms);
    std::vector<double> a(n), p(n);
    double tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = x_hi * rs.uniform();
      p[i] = rs.exponential();
      tot += p[i];
    }
    for (double& v : p) v /= tot;
    return DiscreteMeasure(a, p);
  };
  for (std::size_t trial = 0; trial < trials; ++trial) {
    ++w.trials;
    DiscreteMeasure mu = random_measure(4), nu;
    switch (trial % 3) {
      case 0: {  // pointwise larger path
        std::vector<double> a = mu.atoms();
        for (double& v : a) v = std::min(x_hi, v + (x_hi - v) * rs.uniform());
        nu = DiscreteMeasure(a, mu.weights());
        break;
      }
      case 1: {  // mean-preserving spread of one atom
        std::vector<double> a = mu.atoms(), p = mu.weights();
        const std::size_t k = rs.below(a.size());
        const double room = std::min(a[k], x_hi - a[k]);
        const double d = room * rs.uniform();
        a.push_back(a[k] + d);
        p.push_back(0.5 * p[k]);
        a[k] -= d;
        p[k] *= 0.5;
        nu = DiscreteMeasure(a, p);
        break;
      }
      default:
        nu = random_measure(4);
        break;
    }
    if (!measure_leq(mu, nu)) continue;
    const double excess = mu.integrate(chi) - nu.integrate(chi);
    if (excess > w.excess) {
      w.excess = excess;
      w.lower = mu;
      w.upper = nu;
    }
    if (excess > 1e-10) {
      w.found = true;
      return w;
    }
  }
  return w;
}

}  // namespace parisi
