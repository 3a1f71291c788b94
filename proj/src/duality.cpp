#include "parisi/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "parisi/common/lp.hpp"
#include "parisi/common/optim.hpp"
#include "parisi/common/parallel.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"

namespace parisi {

double parisi_penalty(const MixtureModel& model, double t, const DiscreteMeasure& nu) {
  return nu.integrate([&](double q) { return xi_star(model, q, t).value; });
}

double eval_lower(const MixtureModel& model, double t, const DiscreteMeasure& nu, const PsiOptions& options) {
  if (!(t > 0.0)) throw ValidationError("eval_lower: t must be > 0");
  return psi(model, nu, options).value - parisi_penalty(model, t, nu);
}

double eval_lower(const MixtureModel& model, double t, const FamilyMember& nu) {
  if (!(t > 0.0)) throw ValidationError("eval_lower: t must be > 0");
  return nu.psi - parisi_penalty(model, t, nu.mu);
}

UpperValue eval_upper(const HopfLax& op, const PLConvexFn& chi, const std::vector<FamilyMember>& family) {
  UpperValue u;
  const SupResult s = s_t_sup(op, chi, 0.0);
  const PsiStarResult ps = psi_star(chi, family);
  u.s_t_at_zero = s.value;
  u.hopf_lax_argmax = s.argmax;
  u.psi_star = ps.value;
  u.psi_star_argmin = ps.argmin;
  u.value = s.value - ps.value;
  return u;
}

UpperValue eval_upper(const MixtureModel& model, double t, const PLConvexFn& chi,
                      const std::vector<FamilyMember>& family) {
  if (!(t > 0.0)) throw ValidationError("eval_upper: t must be > 0");
  return eval_upper(HopfLax(model, t), chi, family);
}

// ------------------------------------------------------------------ lower side

namespace {

// q_k = x_max * (p_0 + ... + p_k) with p = softmax(first K+2 entries);
// weights = softmax(last K+1 entries).
DiscreteMeasure decode_measure(std::span<const double> p, std::size_t K, double x_max) {
  const std::size_t nq = K + 2, nw = K + 1;
  auto softmax = [](std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> e(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += e[i] = std::exp(v[i] - m);
    for (double& x : e) x /= s;
    return e;
  };
  const std::vector<double> pq = softmax(p.subspan(0, nq));
  const std::vector<double> w = softmax(p.subspan(nq, nw));
  std::vector<double> q(nw);
  double acc = 0.0;
  for (std::size_t k = 0; k < nw; ++k) {
    acc += pq[k];
    q[k] = std::min(x_max * acc, x_max);
  }
  return DiscreteMeasure(q, w);
}

std::vector<double> encode_measure(const DiscreteMeasure& mu, std::size_t K, double x_max) {
  // Pads with duplicate top atoms of zero extra increment when mu is small.
  std::vector<double> q = mu.atoms(), w = mu.weights();
  while (q.size() < K + 1) {
    q.push_back(q.back());
    w.back() *= 0.5;
    w.push_back(w.back());
  }
  q.resize(K + 1);
  w.resize(K + 1);
  std::vector<double> p(2 * K + 3);
  double prev = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    p[k] = std::log(std::max((std::min(q[k], x_max) - prev) / x_max, 1e-12));
    prev = std::min(q[k], x_max);
  }
  p[K + 1] = std::log(std::max((x_max - prev) / x_max, 1e-12));
  const double ws = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t k = 0; k <= K; ++k) p[K + 2 + k] = std::log(std::max(w[k] / ws, 1e-300));
  return p;
}

// Candidates with fewer atoms or snapped to 0.
std::vector<DiscreteMeasure> simplifications(const DiscreteMeasure& mu) {
  std::vector<DiscreteMeasure> out;
  out.push_back(DiscreteMeasure::dirac(0.0));
  const auto& a = mu.atoms();
  const auto& w = mu.weights();
  const std::size_t n = a.size();
  if (a[0] > 0.0) {
    std::vector<double> b = a;
    b[0] = 0.0;
    out.emplace_back(b, w);
  }
  if (n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> b, v;
      double rest = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          b.push_back(a[j]);
          v.push_back(w[j]);
          rest += w[j];
        }
      for (double& x : v) x /= rest;
      out.emplace_back(b, v);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (int mode = 0; mode < 3; ++mode) {
        std::vector<double> b = a;
        const double at = mode == 0 ? (w[i] * a[i] + w[i + 1] * a[i + 1]) / (w[i] + w[i + 1])
                                    : (mode == 1 ? a[i] : a[i + 1]);
        b[i] = b[i + 1] = at;
        out.emplace_back(b, w);
      }
    }
  }
  return out;
}

}  // namespace

LowerResult maximize_lower(const MixtureModel& model, double t, const SolverOptions& opt,
                           std::vector<FamilyMember>* visited, std::vector<TraceRow>* trace) {
  if (!(t > 0.0)) throw ValidationError("maximize_lower: t must be > 0");
  const std::size_t K = opt.levels;
  const double x_max = model.x_max(t);
  const std::size_t dims = 2 * K + 3;
  const std::size_t starts = std::max<std::size_t>(1, opt.restarts) + opt.warm_start.size();

  struct StartResult {
    std::vector<FamilyMember> seen;
    DiscreteMeasure best;
    double value = -std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
  };
  std::vector<StartResult> results(starts);

  par::parallel_for(starts, [&](std::size_t s) {
    StartResult& r = results[s];
    std::vector<double> x0(dims, 0.0);
    if (s < opt.warm_start.size()) {
      x0 = encode_measure(opt.warm_start[s], K, x_max);
    } else if (s > opt.warm_start.size()) {
      rng::Stream rs(opt.seed, 1000 + s);
      for (double& v : x0) v = 1.5 * rs.normal();
    }
    auto obj = [&](std::span<const double> p) {
      const DiscreteMeasure mu = decode_measure(p, K, x_max);
      const double ps = psi(model, mu, opt.psi).value;
      const double val = ps - parisi_penalty(model, t, mu);
      if (visited) r.seen.push_back({mu, ps});
      if (val > r.value) {
        r.value = val;
        r.best = mu;
      }
      return -val;
    };
    optim::PatternOptions po;
    po.initial_step = 1.0;
    po.min_step = 1e-6;
    po.max_evals = opt.max_evals_per_start;
    const auto pr = optim::pattern_search_min(obj, x0, po);
    r.evals = pr.evals;
  });

  LowerResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts; ++s) {
    StartResult& r = results[s];
    best.evals += r.evals;
    if (trace) trace->push_back({"lower_start", s, r.value});
    if (r.value > best.value) {
      best.value = r.value;
      best.argmax = r.best;
    }
    if (visited) visited->insert(visited->end(), r.seen.begin(), r.seen.end());
  }

  // Prefer fewer atoms among numerically equal optima.
  for (std::size_t round = 0; round < 16; ++round) {
    const auto cands = simplifications(best.argmax);
    std::vector<double> vals(cands.size()), psis(cands.size());
    par::parallel_for(cands.size(), [&](std::size_t i) {
      psis[i] = psi(model, cands[i], opt.psi).value;
      vals[i] = psis[i] - parisi_penalty(model, t, cands[i]);
    });
    std::size_t pick = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (visited) visited->push_back({cands[i], psis[i]});
      if (vals[i] < best.value - 1e-10) continue;
      if (cands[i].size() > best.argmax.size()) continue;
      if (cands[i] == best.argmax) continue;
      if (pick == cands.size() || cands[i].size() < cands[pick].size() ||
          (cands[i].size() == cands[pick].size() && vals[i] > vals[pick]))
        pick = i;
    }
    if (pick == cands.size()) break;
    best.argmax = cands[pick];
    best.value = std::max(best.value, vals[pick]);
    if (vals[pick] < best.value) best.value = vals[pick];
    if (trace) trace->push_back({"simplify", round, best.value});
  }
  return best;
}

// ------------------------------------------------------------------ upper side

std::vector<DiscreteMeasure> lattice_family(double x_hi, std::size_t points) {
  std::vector<DiscreteMeasure> out;
  if (points < 2) points = 2;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = x_hi * static_cast<double>(i) / static_cast<double>(points - 1);
  for (std::size_t mask = 1; mask < (std::size_t{1} << points); ++mask) {
    const int bits = __builtin_popcountll(mask);
    if (bits > 4) continue;
    std::vector<double> a, w;
    for (std::size_t i = 0; i < points; ++i)
      if (mask & (std::size_t{1} << i)) {
        a.push_back(grid[i]);
        w.push_back(1.0 / bits);
      }
    out.emplace_back(a, w);
  }
  const std::size_t fine = 8 * (points - 1);
  for (std::size_t i = 0; i <= fine; ++i)
    if (i % 8 != 0) out.push_back(DiscreteMeasure::dirac(x_hi * static_cast<double>(i) / static_cast<double>(fine)));
  return out;
}

namespace {

// int (x - k)^+ dnu
double hinge_integral(const DiscreteMeasure& nu, double k) {
  return nu.integrate([k](double x) { return std::max(x - k, 0.0); });
}

}  // namespace

UpperResult minimize_upper(const MixtureModel& model, const UpperProblem& pb, const std::vector<FamilyMember>& family) {
  if (family.empty()) throw ValidationError("minimize_upper: empty family");
  if (pb.knots.size() < 2) throw ValidationError("minimize_upper: need at least 2 knots");
  const std::size_t m = pb.knots.size() - 1;
  const bool hopf = pb.t > 0.0;
  std::optional<HopfLax> op;
  if (hopf) op.emplace(model, pb.t);

  // Master problem over chi = sum_k d_k (x - x_k)^+:
  //   min z1 + z2 (+ int chi d base when t = 0)
  //   z1 >= chi(y) - P(y) for y in the y-cuts,
  //   z2 >= psi(nu) - int chi dnu for nu in the family cuts,
  //   sum d = 1 (or <= 1), d >= 0.
  // It is solved through its dual, whose rows are the m increments; cuts
  // become columns. The increments are the duals of those rows.
  std::vector<double> c(m, 0.0);
  if (!hopf)
    for (std::size_t k = 0; k < m; ++k) c[k] = hinge_integral(pb.base, pb.knots[k]);
  std::vector<double> ys, pens;
  std::vector<std::size_t> fam_cols;
  std::vector<bool> in_lp(family.size(), false);
  auto add_y_cut = [&](double y) {
    ys.push_back(y);
    pens.push_back(op->penalty(y));
  };
  auto add_family_cut = [&](std::size_t i) {
    if (in_lp[i]) return false;
    in_lp[i] = true;
    fam_cols.push_back(i);
    return true;
  };
  std::vector<std::vector<double>> hinge_cache(family.size());
  auto hinges = [&](std::size_t i) -> const std::vector<double>& {
    auto& h = hinge_cache[i];
    if (h.empty()) {
      h.resize(m);
      for (std::size_t k = 0; k < m; ++k) h[k] = hinge_integral(family[i].mu, pb.knots[k]);
    }
    return h;
  };

  struct Master {
    bool ok = false;
    lp::Status status = lp::Status::optimal;
    double objective = 0.0;
    std::vector<double> d;
    double z1 = 0.0, z2 = 0.0;
  };
  auto solve_master = [&]() {
    // Columns: lambda, alpha_j (y-cuts), beta_i (family cuts).
    const std::size_t na = hopf ? ys.size() : 0, nb = fam_cols.size();
    const std::size_t n = 1 + na + nb;
    lp::Problem prob(n);
    const double lam_sign = pb.final_slope_one ? 1.0 : -1.0;
    if (pb.final_slope_one) prob.set_free(0);
    std::vector<double> obj(n, 0.0);
    obj[0] = lam_sign;
    for (std::size_t j = 0; j < na; ++j) obj[1 + j] = -pens[j];
    for (std::size_t i = 0; i < nb; ++i) obj[1 + na + i] = family[fam_cols[i]].psi;
    prob.set_objective(obj, true);
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> row(n, 0.0);
      row[0] = lam_sign;
      for (std::size_t j = 0; j < na; ++j) row[1 + j] = -std::max(ys[j] - pb.knots[k], 0.0);
      for (std::size_t i = 0; i < nb; ++i) row[1 + na + i] = hinges(fam_cols[i])[k];
      prob.add_row(row, lp::Sense::le, c[k]);
    }
    if (hopf) {
      std::vector<double> row(n, 0.0);
      for (std::size_t j = 0; j < na; ++j) row[1 + j] = 1.0;
      prob.add_row(row, lp::Sense::le, 1.0);
    }
    {
      std::vector<double> row(n, 0.0);
      for (std::size_t i = 0; i < nb; ++i) row[1 + na + i] = 1.0;
      prob.add_row(row, lp::Sense::eq, 1.0);
    }
    lp::Options lo;
    lo.perturb = 1e-7;
    lp::Solution sol = prob.solve(lo);
    if (sol.status != lp::Status::optimal) {
      lo.perturb = 0.0;
      sol = prob.solve(lo);
    }
    Master ms;
    ms.ok = sol.status == lp::Status::optimal;
    ms.status = sol.status;
    if (!ms.ok) return ms;
    ms.objective = sol.objective;
    ms.d.resize(m);
    for (std::size_t k = 0; k < m; ++k) ms.d[k] = std::max(sol.duals[k], 0.0);
    ms.z1 = hopf ? sol.duals[m] : 0.0;
    ms.z2 = sol.duals[hopf ? m + 1 : m];
    return ms;
  };

  if (hopf) {
    const double W = op->window();
    for (double k : pb.knots)
      if (k < W) add_y_cut(k);
    for (int i = 0; i <= 64; ++i) add_y_cut(W * i / 64.0);
  }
  {
    // Seed with the members most active for chi(x) = x.
    std::vector<std::size_t> order(family.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) score[i] = family[i].psi - family[i].mu.mean();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    const std::size_t seed_rows = std::min(pb.initial_family_rows, family.size());
    for (std::size_t i = 0; i < seed_rows; ++i) add_family_cut(order[i]);
    // And an even spread over the family.
    for (std::size_t i = 0; i < seed_rows; ++i) add_family_cut(i * family.size() / seed_rows);
  }

  UpperResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.lp_bound = -std::numeric_limits<double>::infinity();
  for (std::size_t round = 0; round < pb.max_rounds; ++round) {
    const Master sol = solve_master();
    if (!sol.ok) {
      // A later master that fails keeps the best answer so far, unconverged.
      if (round == 0) throw LpFailure(std::string("upper master LP: ") + lp::to_string(sol.status));
      break;
    }
    ++best.rounds;
    best.lp_bound = std::max(best.lp_bound, sol.objective);
    const std::vector<double>& d = sol.d;
    const PLConvexFn chi = PLConvexFn::from_increments(pb.knots, d);

    double a_val;
    double y_arg = 0.0;
    if (hopf) {
      const SupResult s = s_t_sup(*op, chi, 0.0);
      a_val = s.value;
      y_arg = s.argmax;
    } else {
      a_val = chi.integrate(pb.base);
    }
    std::vector<double> gaps(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) gaps[i] = chi.integrate(family[i].mu) - family[i].psi;
    std::vector<std::size_t> order(family.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min<std::size_t>(4, family.size());
    std::partial_sort(order.begin(), order.begin() + top, order.end(),
                      [&](std::size_t a, std::size_t b) { return gaps[a] < gaps[b]; });
    const double ps = gaps[order[0]];
    const double value = a_val - ps;
    if (value < best.value) {
      best.value = value;
      best.chi = chi;
    }
    if (best.value - best.lp_bound <= pb.tol) {
      best.converged = true;
      break;
    }
    bool added = false;
    if (hopf && a_val > sol.z1 + 1e-13) {
      add_y_cut(y_arg);
      added = true;
      // Per-piece maximizers: on a piece of slope s the penalty's derivative
      // equals s at y = t xi'(s).
      double slope = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        slope += d[k];
        const double lo = pb.knots[k], hi = pb.knots[k + 1];
        const double y = std::clamp(pb.t * model.xi_prime(std::min(slope, 1.0)), lo, hi);
        if (chi(y) - op->penalty(y) > sol.z1 + 1e-13) add_y_cut(y);
      }
    }
    for (std::size_t j = 0; j < top; ++j)
      if (-gaps[order[j]] > sol.z2 + 1e-13) added = add_family_cut(order[j]) || added;
    if (!added) {
      best.converged = best.value - best.lp_bound <= 1e-7;
      break;
    }
  }
  return best;
}

SolverReport solve_gap(const MixtureModel& model, double t, const SolverOptions& opt) {
  if (!(t >= 0.0)) throw ValidationError("solve_gap: t must be >= 0");
  if (opt.knots < 2) throw ValidationError("solve_gap: need at least 2 knots");
  SolverReport rep;
  rep.t = t;
  rep.seed = opt.seed;
  rep.cut_tol = opt.cut_tol;
  rep.restarts = opt.restarts;

  if (t == 0.0) {
    // Only delta_0 has a finite penalty; chi(x) = x attains psi_*(chi) = 0 at delta_0.
    rep.lower = psi(model, DiscreteMeasure::dirac(0.0), opt.psi).value;
    rep.lower_argmax = DiscreteMeasure::dirac(0.0);
    std::vector<DiscreteMeasure> fam = lattice_family(model.c2(), opt.lattice_points);
    fam.push_back(DiscreteMeasure::dirac(0.0));
    const auto family = make_family(model, fam, opt.psi);
    rep.upper_argmin = PLConvexFn::linear(1.0, std::max(model.c2(), 1e-12));
    rep.upper = rep.upper_argmin(0.0) - psi_star(rep.upper_argmin, family).value;
    rep.family_size = family.size();
    rep.gap = rep.upper - rep.lower;
    return rep;
  }

  std::vector<FamilyMember> visited;
  const LowerResult lower = maximize_lower(model, t, opt, &visited, &rep.trace);
  rep.lower = lower.value;
  rep.lower_argmax = lower.argmax;
  rep.iterations = lower.evals;

  const double x_max = model.x_max(t);
  std::vector<FamilyMember> family = make_family(model, lattice_family(x_max, opt.lattice_points), opt.psi);
  family.insert(family.end(), visited.begin(), visited.end());
  rep.family_size = family.size();

  UpperProblem pb;
  pb.t = t;
  pb.base = DiscreteMeasure::dirac(0.0);
  pb.knots.resize(opt.knots + 1);
  for (std::size_t k = 0; k <= opt.knots; ++k) pb.knots[k] = x_max * static_cast<double>(k) / opt.knots;
  pb.max_rounds = opt.max_cut_rounds;
  pb.tol = opt.cut_tol;
  const UpperResult up = minimize_upper(model, pb, family);
  rep.upper = up.value;
  rep.upper_argmin = up.chi;
  rep.nonconvergence = !up.converged;
  rep.iterations += up.rounds;
  rep.trace.push_back({"upper_lp_bound", up.rounds, up.lp_bound});
  rep.trace.push_back({"upper", up.rounds, up.value});
  rep.gap = rep.upper - rep.lower;
  return rep;
}

// --------------------------------------------------------------- D >= 1 side

VectorUpperResult eval_upper_vector(const MatrixPsiOracle& psi_oracle, const MixtureModel& model, double t,
                                    const MatrixChi& chi, const std::vector<Eigen::MatrixXd>& directions,
                                    const std::vector<DirectionMeasure>& family) {
  if (directions.empty()) throw EmptyDirections("no directions supplied");
  if (family.empty()) throw ValidationError("eval_upper_vector: empty family");
  if (!(t > 0.0)) throw ValidationError("eval_upper_vector: t must be > 0");
  const auto D = static_cast<Eigen::Index>(model.dim());
  for (const auto& y : directions)
    if (y.rows() != D || y.cols() != D) throw ValidationError("eval_upper_vector: direction size mismatch");

  VectorUpperResult r;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(D, D);
  if (D == 1) {
    std::vector<double> ys;
    for (const auto& y : directions) ys.push_back(y(0, 0));
    auto chi1 = [&](double x) { return chi(Eigen::MatrixXd::Constant(1, 1, x)); };
    r.s_tilde_at_zero = tilde_s_t(chi1, model, t, 0.0, ys, true).value;
  } else {
    r.s_tilde_at_zero = tilde_s_t(chi, model, t, zero, directions).value;
  }

  r.psi_star = std::numeric_limits<double>::infinity();
  r.best_lower = -std::numeric_limits<double>::infinity();
  for (const DirectionMeasure& dm : family) {
    if (dm.indices.empty() || dm.indices.size() != dm.weights.size())
      throw ValidationError("eval_upper_vector: malformed family member");
    std::vector<Eigen::MatrixXd> atoms;
    double penalty = 0.0;
    for (std::size_t i = 0; i < dm.indices.size(); ++i) {
      const Eigen::MatrixXd& y = directions.at(dm.indices[i]);
      atoms.push_back(t * model.xi_grad(y));
      penalty += dm.weights[i] * t * model.theta(y);
    }
    const MatrixAtomsMeasure mu(atoms, dm.weights);
    const double ps = psi_oracle(mu);
    const double pairing = mu.integrate(chi);
    r.psi_star = std::min(r.psi_star, pairing - ps);
    r.best_lower = std::max(r.best_lower, ps - penalty);
  }
  r.upper = r.s_tilde_at_zero - r.psi_star;
  r.bracket_holds = r.best_lower <= r.upper + 1e-8;
  return r;
}

AlphaScan alpha_continuity_scan(const MixtureModel& model, double t, const std::vector<double>& alphas,
                                const SolverOptions& options) {
  AlphaScan scan;
  scan.bound = 3.0 * t + 4.0;
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha_continuity_scan: alphas must lie in [0, 1]");
    const SolverReport rep = solve_gap(perturb_alpha(model, a), t, options);
    scan.rows.push_back({a, rep.lower, rep.upper, 0.5 * (rep.lower + rep.upper)});
  }
  for (std::size_t i = 0; i + 1 < scan.rows.size(); ++i) {
    const AlphaRow& p = scan.rows[i];
    const AlphaRow& q = scan.rows[i + 1];
    const double da = std::abs(q.alpha - p.alpha);
    const double dv = std::abs(q.mid - p.mid);
    const double margin = 0.5 * (std::abs(p.upper - p.lower) + std::abs(q.upper - q.lower)) + 1e-9;
    scan.slopes.push_back(da > 0.0 ? dv / da : 0.0);
    if (dv > scan.bound * da + margin) scan.within_bound = false;
  }
  return scan;
}

}  // namespace parisi
