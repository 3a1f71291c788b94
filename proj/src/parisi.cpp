#include "parisi/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parisi/common/optim.hpp"
#include "parisi/common/parallel.hpp"
#include "parisi/common/quadrature.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/kernels/kernels.hpp"

namespace parisi {

const char* to_string(PsiValue::Method m) {
  return m == PsiValue::Method::recursion ? "recursion" : "cascade_mc";
}

namespace {

struct ScalarSpins {
  std::vector<double> s;
  std::vector<double> logw;
  double c = 0.0;  // max |s|
};

ScalarSpins scalar_spins(const MixtureModel& model) {
  if (model.dim() != 1) throw UnsupportedDimension("psi is only computable for D = 1");
  ScalarSpins out;
  const SpinDistribution& sp = model.spins();
  for (std::size_t i = 0; i < sp.values.size(); ++i) {
    out.s.push_back(sp.values[i][0]);
    out.logw.push_back(std::log(sp.weights[i]));
    out.c = std::max(out.c, std::abs(sp.values[i][0]));
  }
  return out;
}

// Y_K(x) = log sum_a w_a exp(x s_a - q s_a^2).
double leaf_log_partition(const ScalarSpins& sp, double x, double q) {
  double m = -std::numeric_limits<double>::infinity();
  const std::size_t n = sp.s.size();
  double buf[16];
  std::vector<double> big;
  double* e = buf;
  if (n > 16) {
    big.resize(n);
    e = big.data();
  }
  for (std::size_t a = 0; a < n; ++a) {
    e[a] = sp.logw[a] + x * sp.s[a] - q * sp.s[a] * sp.s[a];
    m = std::max(m, e[a]);
  }
  double s = 0.0;
  for (std::size_t a = 0; a < n; ++a) s += std::exp(e[a] - m);
  return m + std::log(s);
}

// How one Gaussian averaging step is discretized.
struct LevelPlan {
  double sigma = 0.0;
  double zeta = 1.0;
  bool skip = false;
  bool trapezoid = true;
  // trapezoid: nodes at j*stride grid steps, |j| <= J
  long stride = 1;
  long J = 0;
  std::vector<double> weights;  // size 2J+1
  long reach = 0;               // grid points needed on each side
};

LevelPlan plan_level(double sigma, double zeta, double c, const PsiOptions& opt) {
  LevelPlan p;
  p.sigma = sigma;
  p.zeta = zeta;
  if (sigma == 0.0) {
    p.skip = true;
    return p;
  }
  const double h = opt.grid_step;
  if (sigma >= 1.5 * h) {
    const double target = std::min(0.25 / std::max(c, 1e-12), 0.5 * sigma);
    p.stride = std::max(1L, static_cast<long>(std::floor(target / h + 1e-9)));
    const double delta = p.stride * h;
    p.J = static_cast<long>(std::ceil(opt.span_sd * sigma / delta));
    p.weights.resize(2 * p.J + 1);
    for (long j = -p.J; j <= p.J; ++j) {
      const double z = j * delta / sigma;
      p.weights[j + p.J] = std::exp(-0.5 * z * z);
    }
    const double tot = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    for (double& w : p.weights) w /= tot;
    p.reach = p.J * p.stride;
  } else {
    p.trapezoid = false;
    const quad::Rule& r = quad::gauss_hermite(opt.quad_order);
    const double zmax = r.nodes.back();
    p.reach = static_cast<long>(std::ceil(sigma * zmax / h)) + 5;
  }
  return p;
}

// 8-point Lagrange weights at offset f in [0, 1) for nodes -3..4.
void lagrange8(double f, double w[8]) {
  for (int p = 0; p < 8; ++p) {
    double num = 1.0, den = 1.0;
    for (int q = 0; q < 8; ++q) {
      if (q == p) continue;
      num *= f - (q - 3);
      den *= (p - 3) - (q - 3);
    }
    w[p] = num / den;
  }
}

// Values of Y (half-width n_in) at x_i + shift for i in [-n_out, n_out].
void shifted_interp(const std::vector<double>& y, long n_in, double shift_steps, long n_out, double* out) {
  const double fl = std::floor(shift_steps);
  const long base = static_cast<long>(fl);
  double w[8];
  lagrange8(shift_steps - fl, w);
  const std::size_t cnt = static_cast<std::size_t>(2 * n_out + 1);
  std::fill(out, out + cnt, 0.0);
  for (int p = 0; p < 8; ++p) {
    const long off = n_in - n_out + base + (p - 3);
    kernels::active().axpy(w[p], y.data() + off, out, cnt);
  }
}

constexpr double kSmallZeta = 0.05;

// One backward step: Y_{k-1}(x) = (1/zeta) log E exp(zeta Y_k(x + sigma Z)).
std::vector<double> average_level(const LevelPlan& p, const std::vector<double>& y, long n_in, long n_out,
                                  const PsiOptions& opt) {
  const std::size_t cnt = static_cast<std::size_t>(2 * n_out + 1);
  const kernels::KernelTable& K = kernels::active();
  std::vector<double> shift(cnt), acc(cnt, 0.0), out(cnt);
  const long center = n_in - n_out;
  if (p.zeta < kSmallZeta) {
    // (1/zeta) log1p(E expm1(zeta (Y - Y_center))) keeps full relative
    // precision as zeta -> 0, where the exp/log form cancels catastrophically.
    auto add = [&](double w, const double* yy) {
      for (std::size_t i = 0; i < cnt; ++i) acc[i] += w * std::expm1(p.zeta * (yy[i] - y[center + i]));
    };
    double wsum = 0.0;
    if (p.trapezoid) {
      for (long j = -p.J; j <= p.J; ++j) {
        add(p.weights[j + p.J], y.data() + center + j * p.stride);
        wsum += p.weights[j + p.J];
      }
    } else {
      const quad::Rule& r = quad::gauss_hermite(opt.quad_order);
      std::vector<double> tmp(cnt);
      for (std::size_t g = 0; g < r.nodes.size(); ++g) {
        shifted_interp(y, n_in, p.sigma * r.nodes[g] / opt.grid_step, n_out, tmp.data());
        add(r.weights[g], tmp.data());
        wsum += r.weights[g];
      }
    }
    for (std::size_t i = 0; i < cnt; ++i) out[i] = y[center + i] + std::log1p(acc[i] / wsum) / p.zeta;
    return out;
  }
  for (std::size_t i = 0; i < cnt; ++i) shift[i] = p.zeta * y[center + i];
  if (p.trapezoid) {
    for (long j = -p.J; j <= p.J; ++j)
      K.accumulate_weighted_exp(p.weights[j + p.J], p.zeta, y.data() + center + j * p.stride, shift.data(),
                                acc.data(), cnt);
  } else {
    const quad::Rule& r = quad::gauss_hermite(opt.quad_order);
    std::vector<double> tmp(cnt);
    for (std::size_t g = 0; g < r.nodes.size(); ++g) {
      shifted_interp(y, n_in, p.sigma * r.nodes[g] / opt.grid_step, n_out, tmp.data());
      K.accumulate_weighted_exp(r.weights[g], p.zeta, tmp.data(), shift.data(), acc.data(), cnt);
    }
  }
  for (std::size_t i = 0; i < cnt; ++i) out[i] = (shift[i] + std::log(acc[i])) / p.zeta;
  return out;
}

}  // namespace

PsiValue psi_path(const MixtureModel& model, const std::vector<double>& q, const std::vector<double>& zeta,
                  const PsiOptions& opt) {
  const ScalarSpins sp = scalar_spins(model);
  if (q.empty() || zeta.size() + 1 != q.size()) throw ValidationError("psi: need K+1 atoms and K exponents");
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!(q[k] >= 0.0) || !std::isfinite(q[k])) throw ValidationError("psi: atoms must be finite and >= 0");
    if (k > 0 && q[k] < q[k - 1]) throw ValidationError("psi: atoms must be nondecreasing");
  }
  for (std::size_t k = 0; k < zeta.size(); ++k) {
    if (!(zeta[k] > 0.0 && zeta[k] < 1.0)) throw DegenerateExponent("exponents must lie in (0, 1)");
    if (k > 0 && zeta[k] < zeta[k - 1]) throw ValidationError("psi: exponents must be nondecreasing");
  }
  if (!(opt.grid_step > 0.0) || !(opt.span_sd > 0.0)) throw ValidationError("psi: bad grid options");

  const std::size_t K = zeta.size();
  PsiValue res;
  res.quad_order = opt.quad_order;

  // Root step uses zeta = 1 (a plain expectation).
  std::vector<LevelPlan> plans(K + 1);
  plans[0] = plan_level(std::sqrt(2.0 * q[0]), 1.0, sp.c, opt);
  for (std::size_t k = 1; k <= K; ++k) plans[k] = plan_level(std::sqrt(2.0 * (q[k] - q[k - 1])), zeta[k - 1], sp.c, opt);

  std::vector<long> half(K + 1);
  half[0] = plans[0].reach;
  for (std::size_t k = 1; k <= K; ++k) half[k] = half[k - 1] + plans[k].reach;

  const double h = opt.grid_step;
  const long nK = half[K];
  std::vector<double> y(static_cast<std::size_t>(2 * nK + 1));
  for (long i = -nK; i <= nK; ++i) y[i + nK] = leaf_log_partition(sp, i * h, q[K]);

  for (std::size_t k = K; k >= 1; --k) {
    if (plans[k].skip) {
      const long cut = half[k] - half[k - 1];
      y = std::vector<double>(y.begin() + cut, y.end() - cut);
      continue;
    }
    y = average_level(plans[k], y, half[k], half[k - 1], opt);
  }

  // Root: psi = -E Y_0(sqrt(2 q_0) Z).
  const LevelPlan& r = plans[0];
  const long n0 = half[0];
  if (r.skip) {
    res.value = -y[n0];
  } else if (r.trapezoid) {
    double s = 0.0;
    for (long j = -r.J; j <= r.J; ++j) s += r.weights[j + r.J] * y[n0 + j * r.stride];
    res.value = -s;
  } else {
    const quad::Rule& g = quad::gauss_hermite(opt.quad_order);
    double s = 0.0, v;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      shifted_interp(y, n0, r.sigma * g.nodes[i] / h, 0, &v);
      s += g.weights[i] * v;
    }
    res.value = -s;
  }
  return res;
}

PsiValue psi(const MixtureModel& model, const DiscreteMeasure& mu, const PsiOptions& opt) {
  // Atoms whose mass vanishes in rounding are dropped so every exponent
  // stays strictly inside (0, 1).
  const std::vector<double> cuts = mu.cuts();
  std::vector<double> q, zeta;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    if (!(hi > lo)) continue;
    if (q.empty()) {
      q.push_back(mu.atoms()[k]);
      continue;
    }
    if (!(lo > 0.0)) {
      q.back() = mu.atoms()[k];
      continue;
    }
    if (!(lo < 1.0)) break;
    zeta.push_back(lo);
    q.push_back(mu.atoms()[k]);
  }
  return psi_path(model, q, zeta, opt);
}

// ------------------------------------------------------------ cascade sampler

namespace {

double log_sum_exp(const std::vector<double>& v) {
  return kernels::logsumexp(std::span<const double>(v.data(), v.size()));
}

struct CascadeContext {
  const ScalarSpins* sp;
  std::vector<double> q;     // q_0..q_K
  std::vector<double> zeta;  // zeta_1..zeta_K
  std::size_t M;
  double max_small_weight = 0.0;
  double max_tail_bound = 0.0;
};

// Log-weights of the top-M points of a Poisson process with intensity
// zeta x^{-1-zeta} dx: u_i = Gamma_i^{-1/zeta}.
std::vector<double> pd_log_points(rng::Stream& rs, double zeta, std::size_t M, CascadeContext& ctx) {
  std::vector<double> lw(M);
  double gamma = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    gamma += rs.exponential();
    lw[i] = -std::log(gamma) / zeta;
  }
  const double lse = log_sum_exp(lw);
  ctx.max_small_weight = std::max(ctx.max_small_weight, std::exp(lw.back() - lse));
  // Expected mass beyond the kept points, relative to the kept total.
  const double a = 1.0 / zeta;
  const double tail = std::exp((1.0 - a) * std::log(gamma) - std::log(a - 1.0) - lse);
  ctx.max_tail_bound = std::max(ctx.max_tail_bound, tail);
  return lw;
}

// Returns (A, B): log sum_leaves w e^{Y_K} and log sum_leaves w below a node
// at `depth` carrying field x.
std::pair<double, double> cascade_node(rng::Stream& rs, std::size_t depth, double x, CascadeContext& ctx) {
  const std::size_t K = ctx.zeta.size();
  if (depth == K) return {leaf_log_partition(*ctx.sp, x, ctx.q[K]), 0.0};
  const double zeta = ctx.zeta[depth];
  const double sigma = std::sqrt(2.0 * (ctx.q[depth + 1] - ctx.q[depth]));
  std::vector<double> lw = pd_log_points(rs, zeta, ctx.M, ctx);
  std::vector<double> a(ctx.M), b(ctx.M);
  for (std::size_t i = 0; i < ctx.M; ++i) {
    const double xi = x + sigma * rs.normal();
    const auto [ai, bi] = cascade_node(rs, depth + 1, xi, ctx);
    a[i] = lw[i] + ai;
    b[i] = lw[i] + bi;
  }
  return {log_sum_exp(a), log_sum_exp(b)};
}

}  // namespace

PsiValue psi_cascade_mc(const MixtureModel& model, const DiscreteMeasure& mu, const CascadeSpec& spec,
                        std::size_t n_rep) {
  const ScalarSpins sp = scalar_spins(model);
  const std::size_t K = mu.size() - 1;
  if (K > 2) throw UnsupportedCascade("cascade sampler supports at most two levels");
  if (spec.points_per_node < 500) throw ValidationError("cascade sampler: need at least 500 points per node");
  if (n_rep < 2) throw ValidationError("cascade sampler: need at least 2 replicates");
  const std::vector<double> cuts = mu.cuts();

  std::vector<double> values(n_rep), small(n_rep), tails(n_rep);
  par::parallel_for(n_rep, [&](std::size_t r) {
    CascadeContext ctx{&sp, mu.atoms(), std::vector<double>(cuts.begin() + 1, cuts.end() - 1),
                       spec.points_per_node};
    rng::Stream rs(rng::derive(spec.seed, r));
    const double x0 = std::sqrt(2.0 * mu.atoms()[0]) * rs.normal();
    const auto [a, b] = cascade_node(rs, 0, x0, ctx);
    values[r] = -(a - b);
    small[r] = ctx.max_small_weight;
    tails[r] = ctx.max_tail_bound;
  });
  const par::MeanStderr ms = par::mean_stderr(values);
  PsiValue res;
  res.method = PsiValue::Method::cascade_mc;
  res.value = ms.mean;
  res.stderr_ = ms.stderr_;
  res.replicates = n_rep;
  if (K > 0) {
    res.truncated_mass_bound = *std::max_element(tails.begin(), tails.end());
    res.truncation_warning = *std::max_element(small.begin(), small.end()) > 1e-6;
  }
  return res;
}

std::vector<double> sample_cascade_weights(const std::vector<double>& zeta, std::size_t M, std::uint64_t seed) {
  if (zeta.size() > 2) throw UnsupportedCascade("cascade sampler supports at most two levels");
  ScalarSpins dummy;
  CascadeContext ctx{&dummy, {}, zeta, M};
  rng::Stream rs(rng::derive(seed, 0));
  std::vector<double> logw{0.0};
  for (double z : zeta) {
    std::vector<double> next;
    next.reserve(logw.size() * M);
    for (double parent : logw) {
      const std::vector<double> lw = pd_log_points(rs, z, M, ctx);
      for (double l : lw) next.push_back(parent + l);
    }
    logw = std::move(next);
  }
  const double lse = log_sum_exp(logw);
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - lse);
  // Fold the rounding residue into the largest weight.
  const double total = par::pairwise_sum(w);
  auto it = std::max_element(w.begin(), w.end());
  *it += 1.0 - total;
  return w;
}

// --------------------------------------------------------------------- psi_*

std::vector<FamilyMember> make_family(const MixtureModel& model, const std::vector<DiscreteMeasure>& measures,
                                      const PsiOptions& options) {
  std::vector<FamilyMember> fam(measures.size());
  par::parallel_for(measures.size(), [&](std::size_t i) {
    fam[i] = {measures[i], psi(model, measures[i], options).value};
  });
  return fam;
}

PsiStarResult psi_star(const std::function<double(double)>& chi, const std::vector<FamilyMember>& family) {
  if (family.empty()) throw ValidationError("psi_star: empty family");
  PsiStarResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const FamilyMember& m : family) {
    const double v = m.mu.integrate(chi) - m.psi;
    if (v < best.value) {
      best.value = v;
      best.argmin = m.mu;
    }
  }
  best.evaluated = family.size();
  return best;
}

PsiStarResult psi_star(const PLConvexFn& chi, const std::vector<FamilyMember>& family) {
  return psi_star([&](double x) { return chi(x); }, family);
}

PsiStarResult psi_star(const MixtureModel& model, const std::function<double(double)>& chi,
                       const PsiStarSearch& search, const PsiOptions& options) {
  if (!(search.q_max > 0.0) || search.grid < 2 || search.atoms < 1)
    throw ValidationError("psi_star: bad search options");
  auto dirac_obj = [&](double q) { return chi(q) - psi(model, DiscreteMeasure::dirac(q), options).value; };

  const double f1 = dirac_obj(search.q_max), f5 = dirac_obj(5.0 * search.q_max), f10 = dirac_obj(10.0 * search.q_max);
  if (f5 < f1 - 1e-9 && f10 < f5 - 1e-9)
    throw DivergenceDetected("objective keeps decreasing past q_max: psi_*(chi) = -inf");

  PsiStarResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < search.grid; ++i) {
    const double q = search.q_max * static_cast<double>(i) / static_cast<double>(search.grid - 1);
    const double v = dirac_obj(q);
    ++best.evaluated;
    if (v < best.value) {
      best.value = v;
      best.argmin = DiscreteMeasure::dirac(q);
    }
  }
  if (search.atoms == 1) return best;

  // Pattern search over (atoms, weight logits); atoms clamped to [0, q_max].
  const std::size_t n = search.atoms;
  auto decode = [&](std::span<const double> p) {
    std::vector<double> a(n), w(n);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, p[n + i]);
    double tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::clamp(p[i], 0.0, search.q_max);
      w[i] = std::exp(p[n + i] - mx);
      tot += w[i];
    }
    for (double& v : w) v /= tot;
    return DiscreteMeasure(a, w);
  };
  auto obj = [&](std::span<const double> p) {
    const DiscreteMeasure mu = decode(p);
    return mu.integrate(chi) - psi(model, mu, options).value;
  };
  rng::Stream rs(search.seed, 0x5ea7c4ULL);
  std::vector<double> x0(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = std::clamp(best.argmin.atoms()[0] + 0.1 * search.q_max * (rs.uniform() - 0.5), 0.0, search.q_max);
    x0[n + i] = 0.0;
  }
  optim::PatternOptions po;
  po.initial_step = 0.1 * search.q_max;
  po.min_step = 1e-6 * search.q_max;
  po.max_evals = search.max_evals;
  const optim::PatternResult pr = optim::pattern_search_min(obj, x0, po);
  best.evaluated += pr.evals;
  if (pr.value < best.value) {
    best.value = pr.value;
    best.argmin = decode(pr.x);
  }
  return best;
}

}  // namespace parisi
