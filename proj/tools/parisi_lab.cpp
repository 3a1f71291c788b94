// parisi_lab: command-line front end. Every subcommand prints one JSON
// document (config, seed, version, result) to stdout or --out.
//
// Exit status: 0 ok, 1 validation or usage error, 2 numerical failure flag.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "parisi/acceptance.hpp"
#include "parisi/common/parallel.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/duality.hpp"
#include "parisi/errors.hpp"
#include "parisi/fenchel.hpp"
#include "parisi/hopf.hpp"
#include "parisi/io.hpp"
#include "parisi/kernels/kernels.hpp"
#include "parisi/models.hpp"
#include "parisi/montecarlo.hpp"
#include "parisi/parisi.hpp"

#ifndef PARISI_LAB_VERSION
#define PARISI_LAB_VERSION "dev"
#endif

using nlohmann::json;
using namespace parisi;

namespace {

// JSON config files: nested objects name subcommands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ConfigError(std::string("config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object() && !looks_like_value(*it)) {
        auto p = parents;
        p.push_back(it.key());
        walk(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(v.is_structured() ? v.dump() : scalar(v));
      } else if (it->is_object()) {
        item.inputs.push_back(it->dump());
      } else {
        item.inputs.push_back(scalar(*it));
      }
      out.push_back(std::move(item));
    }
  }

  // Measures, functions and models given inline are values, not sections.
  static bool looks_like_value(const json& j) {
    return (j.contains("atoms") && j.contains("weights")) || (j.contains("knots") && j.contains("slopes")) ||
           j.contains("terms") || (j.size() == 1 && j.contains("name"));
  }
};

struct Globals {
  std::string model = "sk";
  double t = 1.0;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t threads = 0;
  double tol = -1.0;
};

MixtureModel load_model(const std::string& s) {
  if (s == "sk") return MixtureModel::sk();
  return io::model_from_json(io::load(s));
}

DiscreteMeasure load_measure(const std::string& s) { return io::measure_from_json(io::load(s)); }
PLConvexFn load_chi(const std::string& s) { return io::chi_from_json(io::load(s)); }

double tol_or(const Globals& g, double fallback) { return g.tol > 0.0 ? g.tol : fallback; }

PLConvexFn random_chi(rng::Stream& rs, double x_hi) {
  const std::size_t m = 1 + rs.below(8);
  std::vector<double> knots(m + 1, 0.0);
  for (std::size_t k = 1; k < m; ++k) knots[k] = x_hi * rs.uniform();
  knots[m] = x_hi;
  std::sort(knots.begin(), knots.end());
  for (std::size_t k = 1; k <= m; ++k) knots[k] = std::max(knots[k], knots[k - 1] + 1e-3 * x_hi);
  std::vector<double> inc(m);
  double s = 0.0;
  for (double& d : inc) s += d = rs.uniform();
  const double total = rs.uniform();
  for (double& d : inc) d *= total / s;
  return PLConvexFn::from_increments(knots, inc);
}

DiscreteMeasure random_measure(rng::Stream& rs, std::size_t max_atoms, double x_hi) {
  const std::size_t n = 1 + rs.below(max_atoms);
  std::vector<double> a(n), w(n);
  double s = 0.0;
  for (double& x : a) x = x_hi * rs.uniform();
  for (double& x : w) s += x = 0.05 + rs.uniform();
  for (double& x : w) x /= s;
  return DiscreteMeasure(a, w);
}

void write_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << header << "\n";
  f.precision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << r[i];
    f << "\n";
  }
}

json option_values(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* o : app->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    const auto& res = o->results();
    if (!res.empty()) {
      j[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else if (!o->get_default_str().empty()) {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

// A command returns its result and whether a numerical flag was raised.
struct Outcome {
  json result;
  bool flagged = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parisi_lab: bounds and checks for mean-field spin-glass free energies"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; explicit flags take precedence");

  Globals g;
  app.add_option("--model", g.model, "Model JSON (path or inline) or 'sk'")->capture_default_str();
  app.add_option("--t", g.t, "Time / inverse-temperature parameter t")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Write the JSON result here instead of stdout");
  app.add_option("--threads", g.threads, "Worker thread cap (0 = default)")
      ->envname("PARISI_LAB_THREADS")
      ->capture_default_str();
  app.add_option("--tol", g.tol, "Tolerance override for the command's check");

  std::map<std::string, std::function<Outcome()>> run;

  // ------------------------------------------------------------ conjugate
  {
    auto* c = app.add_subcommand("conjugate", "t xi*(y/t), or the restricted conjugate on [0, 1]");
    auto y = std::make_shared<double>(0.0);
    auto restricted = std::make_shared<bool>(false);
    c->add_option("--y", *y, "Point y")->required();
    c->add_flag("--restricted", *restricted, "sup over b in [0, 1] of y b - xi(b)");
    run["conjugate"] = [&g, y, restricted] {
      const auto m = load_model(g.model);
      const ConjugateResult r = *restricted ? xi_star_restricted(m, *y) : xi_star(m, *y, g.t);
      return Outcome{{{"value", r.value}, {"argmax", r.argmax}}};
    };
  }

  // ------------------------------------------------------------ psi
  {
    auto* c = app.add_subcommand("psi", "psi(mu) by the cascade recursion");
    auto mu = std::make_shared<std::string>();
    auto opt = std::make_shared<PsiOptions>();
    c->add_option("--mu", *mu, "Measure JSON {\"atoms\":[..],\"weights\":[..]}")->required();
    c->add_option("--quad-order", opt->quad_order)->capture_default_str();
    c->add_option("--grid-step", opt->grid_step)->capture_default_str();
    run["psi"] = [&g, mu, opt] {
      return Outcome{io::to_json(psi(load_model(g.model), load_measure(*mu), *opt))};
    };
  }

  // ------------------------------------------------------------ psi-star
  {
    auto* c = app.add_subcommand("psi-star", "min over measures of int chi dmu - psi(mu), search mode");
    auto chi = std::make_shared<std::string>();
    auto s = std::make_shared<PsiStarSearch>();
    c->add_option("--chi", *chi, "PLConvexFn JSON {\"knots\":[..],\"slopes\":[..]}")->required();
    c->add_option("--atoms", s->atoms)->capture_default_str();
    c->add_option("--q-max", s->q_max)->capture_default_str();
    c->add_option("--grid", s->grid)->capture_default_str();
    c->add_option("--max-evals", s->max_evals)->capture_default_str();
    run["psi-star"] = [&g, chi, s] {
      PsiStarSearch search = *s;
      search.seed = g.seed;
      const PLConvexFn f = load_chi(*chi);
      const auto r = psi_star(load_model(g.model), [&](double x) { return f(x); }, search);
      return Outcome{{{"value", r.value}, {"argmin", io::to_json(r.argmin)}, {"upper_bound", r.upper_bound},
                      {"evaluated", r.evaluated}}};
    };
  }

  // ------------------------------------------------------------ hopf
  {
    auto* c = app.add_subcommand("hopf", "S_t chi(x) by the sup form and the Hopf form");
    auto chi = std::make_shared<std::string>();
    auto xs = std::make_shared<std::vector<double>>(std::vector<double>{0.0});
    c->add_option("--chi", *chi, "PLConvexFn JSON")->required();
    c->add_option("--x", *xs, "Evaluation points")->capture_default_str();
    run["hopf"] = [&g, chi, xs] {
      const auto m = load_model(g.model);
      const PLConvexFn f = load_chi(*chi);
      json rows = json::array();
      for (double x : *xs) {
        const auto a = s_t_sup(m, f, g.t, x);
        const auto b = s_t_hopf(m, f, g.t, x);
        rows.push_back({{"x", x}, {"sup", a.value}, {"sup_argmax", a.argmax}, {"hopf", b.value},
                        {"hopf_argmax", b.argmax}});
      }
      return Outcome{{{"rows", rows}}};
    };
  }

  // ------------------------------------------------------------ hopf-check
  {
    auto* c = app.add_subcommand("hopf-check", "Sup form against Hopf form on random chi");
    auto trials = std::make_shared<std::size_t>(100);
    auto points = std::make_shared<std::size_t>(50);
    c->add_option("--trials", *trials)->capture_default_str();
    c->add_option("--points", *points, "x-grid size on [0, 2.5]")->capture_default_str();
    run["hopf-check"] = [&g, trials, points] {
      const auto m = load_model(g.model);
      const HopfLax op(m, g.t);
      std::vector<double> worst(*trials, 0.0);
      const std::size_t n_x = std::max<std::size_t>(*points, 2);
      par::parallel_for(*trials, [&](std::size_t i) {
        rng::Stream rs(g.seed, i);
        const PLConvexFn chi = random_chi(rs, 2.0);
        const PLConjugate conj(chi);
        for (std::size_t k = 0; k < n_x; ++k) {
          const double x = 2.5 * static_cast<double>(k) / (n_x - 1);
          worst[i] = std::max(worst[i], std::abs(s_t_sup(op, chi, x).value - s_t_hopf(m, conj, g.t, x).value));
        }
      });
      double mx = 0.0;
      for (double w : worst) mx = std::max(mx, w);
      const double tol = tol_or(g, 1e-6);
      return Outcome{{{"max_abs_diff", mx}, {"tolerance", tol}, {"trials", *trials}, {"points", n_x}}, mx > tol};
    };
  }

  // ------------------------------------------------------------ hj-dim
  {
    auto* c = app.add_subcommand("hj-dim", "v_j(t, x): separable form against the j-dimensional Hopf form");
    auto chi = std::make_shared<std::string>();
    auto xs = std::make_shared<std::vector<double>>();
    c->add_option("--chi", *chi, "PLConvexFn JSON")->required();
    c->add_option("--x", *xs, "Nondecreasing path x_1 .. x_j")->required();
    run["hj-dim"] = [&g, chi, xs] {
      const auto r = hj_finite_dim(load_model(g.model), load_chi(*chi), g.t, FinitePath{*xs});
      return Outcome{{{"value", r.value}, {"separable", r.separable}, {"hopf", r.hopf}}};
    };
  }

  // ------------------------------------------------------------ kr-norm
  {
    auto* c = app.add_subcommand("kr-norm", "KR norm of a signed measure: LP and closed form");
    auto nu = std::make_shared<std::string>();
    c->add_option("--nu", *nu, "Signed measure JSON {\"atoms\":[..],\"weights\":[..]}")->required();
    run["kr-norm"] = [&g, nu] {
      const json j = io::load(*nu);
      const SignedAtoms s(j.at("atoms").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
      const double lp = kr_norm(s), cf = kr_norm_closed_form(s);
      return Outcome{{{"lp", lp}, {"closed_form", cf}, {"abs_diff", std::abs(lp - cf)}},
                     std::abs(lp - cf) > tol_or(g, 1e-9)};
    };
  }

  // ------------------------------------------------------------ leq
  {
    auto* c = app.add_subcommand("leq", "Cone order mu <= nu, with an optional chi to compare integrals");
    auto mu = std::make_shared<std::string>(), nu = std::make_shared<std::string>();
    auto chi = std::make_shared<std::string>();
    c->add_option("--mu", *mu)->required();
    c->add_option("--nu", *nu)->required();
    c->add_option("--chi", *chi, "PLConvexFn JSON");
    run["leq"] = [mu, nu, chi] {
      const auto a = load_measure(*mu), b = load_measure(*nu);
      json r{{"leq", measure_leq(a, b)}, {"geq", measure_leq(b, a)}, {"w1", w1_distance(a, b)}};
      if (!chi->empty()) {
        const PLConvexFn f = load_chi(*chi);
        r["int_chi_mu"] = f.integrate(a);
        r["int_chi_nu"] = f.integrate(b);
      }
      return Outcome{r};
    };
  }

  // ------------------------------------------------------------ gap
  {
    auto* c = app.add_subcommand("gap", "Bracket the limit free energy between the two variational bounds");
    auto o = std::make_shared<SolverOptions>();
    auto trace_csv = std::make_shared<std::string>();
    c->add_option("--levels", o->levels, "K of the sup-side measures")->capture_default_str();
    c->add_option("--knots", o->knots, "Pieces m of the inf-side chi")->capture_default_str();
    c->add_option("--restarts", o->restarts)->capture_default_str();
    c->add_option("--max-evals", o->max_evals_per_start)->capture_default_str();
    c->add_option("--max-cut-rounds", o->max_cut_rounds)->capture_default_str();
    c->add_option("--lattice-points", o->lattice_points)->capture_default_str();
    c->add_option("--trace-csv", *trace_csv, "Write the optimizer trace as CSV");
    run["gap"] = [&g, o, trace_csv] {
      SolverOptions so = *o;
      so.seed = g.seed;
      if (g.tol > 0.0) so.cut_tol = g.tol;
      const SolverReport r = solve_gap(load_model(g.model), g.t, so);
      if (!trace_csv->empty()) {
        std::ofstream f(*trace_csv);
        if (!f) throw ValidationError("cannot write '" + *trace_csv + "'");
        f.precision(17);
        f << "phase,iteration,value\n";
        for (const auto& row : r.trace) f << row.phase << "," << row.iteration << "," << row.value << "\n";
      }
      return Outcome{io::to_json(r), r.nonconvergence};
    };
  }

  // ------------------------------------------------------------ alpha-scan
  {
    auto* c = app.add_subcommand("alpha-scan", "Brackets under xi + alpha x^2 and their slopes in alpha");
    auto alphas = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 0.1, 0.2});
    auto o = std::make_shared<SolverOptions>();
    auto csv = std::make_shared<std::string>();
    o->levels = 2;
    o->knots = 32;
    o->restarts = 4;
    c->add_option("--alphas", *alphas)->capture_default_str();
    c->add_option("--levels", o->levels)->capture_default_str();
    c->add_option("--knots", o->knots)->capture_default_str();
    c->add_option("--restarts", o->restarts)->capture_default_str();
    c->add_option("--csv", *csv, "Write alpha,lower,upper,mid as CSV");
    run["alpha-scan"] = [&g, alphas, o, csv] {
      SolverOptions so = *o;
      so.seed = g.seed;
      const AlphaScan s = alpha_continuity_scan(load_model(g.model), g.t, *alphas, so);
      json rows = json::array();
      std::vector<std::vector<double>> table;
      for (const auto& r : s.rows) {
        rows.push_back({{"alpha", r.alpha}, {"lower", r.lower}, {"upper", r.upper}, {"mid", r.mid}});
        table.push_back({r.alpha, r.lower, r.upper, r.mid});
      }
      if (!csv->empty()) write_csv(*csv, "alpha,lower,upper,mid", table);
      return Outcome{{{"rows", rows}, {"slopes", s.slopes}, {"bound", s.bound}, {"within_bound", s.within_bound}},
                     !s.within_bound};
    };
  }

  // ------------------------------------------------------------ fm-check
  {
    auto* c = app.add_subcommand("fm-check", "Double conjugate of a random min-of-affine functional");
    auto pieces = std::make_shared<std::size_t>(3);
    auto tests = std::make_shared<std::size_t>(20);
    auto fam = std::make_shared<std::size_t>(200);
    c->add_option("--pieces", *pieces)->capture_default_str();
    c->add_option("--tests", *tests)->capture_default_str();
    c->add_option("--family", *fam, "Random family size")->capture_default_str();
    run["fm-check"] = [&g, pieces, tests, fam] {
      rng::Stream rs(g.seed, 0);
      auto grid_fn = [&] {
        std::vector<double> nodes{0.0}, vals{0.5 * rs.normal()};
        for (int k = 1; k <= 4; ++k) {
          nodes.push_back(0.5 * k);
          vals.push_back(vals.back() + 0.5 * (2.0 * rs.uniform() - 1.0));
        }
        return fenchel::GridFunction(nodes, vals);
      };
      std::vector<fenchel::AffinePiece> ps;
      std::vector<fenchel::GridFunction> chis;
      for (std::size_t l = 0; l < *pieces; ++l) {
        ps.push_back({grid_fn(), 0.3 * rs.normal()});
        chis.push_back(ps.back().chi);
      }
      const auto phi_c = fenchel::ConcaveFunctional::min_of_affine(ps);
      const std::function<double(const DiscreteMeasure&)> phi = [&](const DiscreteMeasure& m) { return phi_c(m); };
      std::vector<DiscreteMeasure> family = lattice_family(2.0, 6), mus;
      for (std::size_t k = 0; k < *fam; ++k) family.push_back(random_measure(rs, 4, 2.0));
      for (std::size_t k = 0; k < *tests; ++k) mus.push_back(random_measure(rs, 4, 2.0));
      const auto r = fenchel::fm_roundtrip(phi, chis, mus, family, tol_or(g, 1e-6));
      const std::function<double(const DiscreteMeasure&)> bad = [](const DiscreteMeasure& m) {
        return std::abs(m.mean() - 1.0);
      };
      const auto w = fenchel::find_concavity_witness(bad, chis, family, 2000, g.seed);
      return Outcome{{{"max_abs_diff", r.max_abs_diff},
                      {"min_excess", r.min_excess},
                      {"family_too_coarse", r.family_too_coarse},
                      {"nonconcave_witness_found", w.found},
                      {"nonconcave_witness_excess", w.excess}},
                     r.max_abs_diff > tol_or(g, 1e-6)};
    };
  }

  // ------------------------------------------------------------ jensen
  {
    auto* c = app.add_subcommand("jensen", "Jensen on chain mixtures of psi and the extreme-set search");
    auto trials = std::make_shared<std::size_t>(100);
    auto extreme = std::make_shared<std::size_t>(10000);
    c->add_option("--trials", *trials)->capture_default_str();
    c->add_option("--extreme-trials", *extreme)->capture_default_str();
    run["jensen"] = [&g, trials, extreme] {
      const auto m = load_model(g.model);
      const fenchel::MatrixFunctional phi = [&](const MatrixAtomsMeasure& mu) {
        std::vector<double> a;
        for (const auto& x : mu.atoms) a.push_back(x(0, 0));
        return psi(m, DiscreteMeasure(a, mu.weights)).value;
      };
      rng::Stream rs(g.seed, 0);
      std::size_t holds = 0;
      double worst = -1e300;
      for (std::size_t k = 0; k < *trials; ++k) {
        // Components supported on one increasing chain of scalars.
        const std::size_t n = 2 + rs.below(3), parts = 2 + rs.below(2);
        std::vector<double> chain(n);
        double cur = 0.0;
        for (double& x : chain) x = cur += 0.5 * rs.uniform();
        fenchel::MatrixMixture eta;
        double total = 0.0;
        for (std::size_t p = 0; p < parts; ++p) {
          std::vector<Eigen::MatrixXd> atoms;
          std::vector<double> ws;
          double s = 0.0;
          for (double x : chain) {
            atoms.push_back(Eigen::MatrixXd::Constant(1, 1, x));
            ws.push_back(0.05 + rs.uniform());
            s += ws.back();
          }
          for (double& w : ws) w /= s;
          eta.support.emplace_back(atoms, ws);
          eta.weights.push_back(0.1 + rs.uniform());
          total += eta.weights.back();
        }
        for (double& w : eta.weights) w /= total;
        const auto r = fenchel::jensen_check(phi, eta);
        holds += r.holds;
        worst = std::max(worst, r.mean_of_phi - r.phi_of_bar);
      }
      const auto ext = fenchel::extreme_set_search(*extreme, g.seed);
      return Outcome{{{"jensen_holds", holds},
                      {"jensen_trials", *trials},
                      {"max_mean_minus_bar", worst},
                      {"extreme_trials", ext.trials},
                      {"extreme_counterexamples", ext.counterexamples},
                      {"chain_trials", ext.chain_trials},
                      {"chain_failures", ext.chain_failures}},
                     holds != *trials || ext.counterexamples != 0};
    };
  }

  // ------------------------------------------------------------ extend
  {
    auto* c = app.add_subcommand("extend", "Concave extension of phi from a family to a measure");
    auto fam = std::make_shared<std::string>(), phi = std::make_shared<std::string>(),
         mu = std::make_shared<std::string>();
    c->add_option("--family", *fam, "JSON array of measures")->required();
    c->add_option("--phi", *phi, "JSON array of values on the family (default psi under --model)");
    c->add_option("--mu", *mu, "Target measure")->required();
    run["extend"] = [&g, fam, phi, mu] {
      const json fj = io::load(*fam);
      if (!fj.is_array()) throw ValidationError("extend: --family must be a JSON array");
      std::vector<DiscreteMeasure> family;
      for (const auto& m : fj) family.push_back(io::measure_from_json(m));
      std::vector<double> vals;
      if (phi->empty()) {
        for (const auto& f : make_family(load_model(g.model), family)) vals.push_back(f.psi);
      } else {
        vals = io::load(*phi).get<std::vector<double>>();
      }
      const auto r = fenchel::extend_phi(family, vals, load_measure(*mu));
      return Outcome{{{"value", r.value}, {"weights", r.weights}, {"lower_bound", r.lower_bound}}};
    };
  }

  // ------------------------------------------------------------ mc
  {
    auto* c = app.add_subcommand("mc", "Finite-N free energy by exact enumeration, Gaussian disorder average");
    auto N = std::make_shared<std::size_t>(12);
    auto samples = std::make_shared<std::size_t>(200);
    auto csv = std::make_shared<std::string>();
    c->add_option("--N", *N, "Number of spins (<= 22)")->capture_default_str();
    c->add_option("--samples", *samples)->capture_default_str();
    c->add_option("--csv", *csv, "Write per-sample values as CSV");
    run["mc"] = [&g, N, samples, csv] {
      const auto e = mc::sample_free_energy(load_model(g.model), g.t, *N, *samples, g.seed);
      if (!csv->empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < e.values.size(); ++i) rows.push_back({static_cast<double>(i), e.values[i]});
        write_csv(*csv, "sample,value", rows);
      }
      return Outcome{{{"N", e.N}, {"samples", e.n_samples}, {"mean", e.mean}, {"stderr", e.stderr_},
                      {"mode", e.mode}}};
    };
  }

  // ------------------------------------------------------------ enriched
  {
    auto* c = app.add_subcommand("enriched", "Finite-N free energy with the extra sqrt(2q) z.s - q|s|^2 field");
    auto q = std::make_shared<double>(0.0);
    auto N = std::make_shared<std::size_t>(12);
    auto samples = std::make_shared<std::size_t>(200);
    auto exact = std::make_shared<bool>(false);
    c->add_option("--q", *q)->capture_default_str();
    c->add_option("--N", *N)->capture_default_str();
    c->add_option("--samples", *samples)->capture_default_str();
    c->add_flag("--exact", *exact, "Quadrature over z (t = 0 only)");
    run["enriched"] = [&g, q, N, samples, exact] {
      const auto m = load_model(g.model);
      const auto e = mc::enriched_free_energy(m, g.t, *q, *N, *samples, g.seed, *exact);
      json r{{"N", e.N}, {"samples", e.n_samples}, {"q", e.q}, {"mean", e.mean}, {"stderr", e.stderr_},
             {"mode", e.mode}};
      if (g.t == 0.0 && m.dim() == 1) r["psi_dirac_q"] = psi(m, DiscreteMeasure::dirac(*q)).value;
      return Outcome{r};
    };
  }

  // ------------------------------------------------------------ cascade-oracle
  {
    auto* c = app.add_subcommand("cascade-oracle", "psi by recursion against a sampled truncated cascade");
    auto mu = std::make_shared<std::string>("{\"atoms\":[0.2,0.6],\"weights\":[0.5,0.5]}");
    auto M = std::make_shared<std::size_t>(2000);
    auto reps = std::make_shared<std::size_t>(200);
    c->add_option("--mu", *mu)->capture_default_str();
    c->add_option("--M", *M, "Points per cascade node")->capture_default_str();
    c->add_option("--reps", *reps)->capture_default_str();
    run["cascade-oracle"] = [&g, mu, M, reps] {
      const auto m = load_model(g.model);
      const auto measure = load_measure(*mu);
      const double rec = psi(m, measure).value;
      const auto est = psi_cascade_mc(m, measure, {*M, g.seed}, *reps);
      const double z = std::abs(rec - est.value) / est.stderr_;
      const double bands = tol_or(g, 3.0);
      return Outcome{{{"recursion", rec}, {"mc", io::to_json(est)}, {"z", z}, {"bands", bands}}, z > bands};
    };
  }

  // ------------------------------------------------------------ suite
  {
    auto* c = app.add_subcommand("suite", "Run a test battery ('acceptance')");
    auto name = std::make_shared<std::string>();
    auto only = std::make_shared<std::vector<int>>();
    c->add_option("name", *name, "Battery name")->required()->check(CLI::IsMember({"acceptance"}));
    c->add_option("--only", *only, "Criterion numbers to run")->delimiter(',');
    run["suite"] = [&g, only, seed_opt] {
      acceptance::Options o;
      if (seed_opt->count() > 0) o.seed = g.seed;
      std::vector<int> ids = *only;
      if (ids.empty())
        for (int i = 1; i <= acceptance::kCriteria; ++i) ids.push_back(i);
      json rows = json::array();
      bool all = true;
      for (int id : ids) {
        const auto r = acceptance::run_criterion(id, o);
        std::fprintf(stderr, "%s\n", acceptance::format_line(r).c_str());
        rows.push_back(acceptance::to_json(r));
        all = all && r.pass();
      }
      return Outcome{{{"criteria", rows}, {"all_pass", all}}, !all};
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help() << "\n";
    return 1;
  }

  if (g.threads > 0) par::set_max_threads(g.threads);

  const CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  json doc;
  doc["command"] = cmd;
  doc["version"] = PARISI_LAB_VERSION;
  doc["simd"] = std::string(kernels::isa_name(kernels::active().isa));
  doc["seed"] = g.seed;
  doc["config"] = option_values(&app);
  doc["config"][cmd] = option_values(sub);

  int code = 0;
  try {
    const Outcome o = run.at(cmd)();
    doc["result"] = o.result;
    doc["flagged"] = o.flagged;
    code = o.flagged ? 2 : 0;
  } catch (const ValidationError& e) {
    json err{{"error", "validation"}, {"message", e.what()}, {"command", cmd}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    json err{{"error", "numerical"}, {"message", e.what()}, {"command", cmd}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const json::exception& e) {
    json err{{"error", "validation"}, {"message", e.what()}, {"command", cmd}};
    std::cerr << err.dump() << "\n";
    return 1;
  }

  const std::string text = doc.dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(g.out);
    if (!f) {
      std::cerr << json{{"error", "validation"}, {"message", "cannot write " + g.out}}.dump() << "\n";
      return 1;
    }
    f << text;
  }
  return code;
}
