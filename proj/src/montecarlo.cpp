#include "parisi/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "parisi/common/parallel.hpp"
#include "parisi/common/quadrature.hpp"
#include "parisi/common/rng.hpp"
#include "parisi/errors.hpp"
#include "parisi/kernels/kernels.hpp"

namespace parisi::mc {

Couplings::Couplings(std::size_t n) : N(n), field(n, 0.0), pair(n * n, 0.0) {}

void Couplings::add_pair(std::size_t i, std::size_t j, double v) {
  if (i == j) {
    constant += v;
    return;
  }
  pair[i * N + j] += v;
  pair[j * N + i] += v;
}

void Couplings::scale(double s) {
  constant *= s;
  for (double& v : field) v *= s;
  for (double& v : pair) v *= s;
  for (auto& [m, c] : higher) c *= s;
}

double Couplings::evaluate(std::uint32_t neg) const {
  auto s = [neg](std::size_t i) { return (neg >> i) & 1u ? -1.0 : 1.0; };
  double v = constant;
  for (std::size_t i = 0; i < N; ++i) {
    v += field[i] * s(i);
    for (std::size_t j = i + 1; j < N; ++j) v += pair[i * N + j] * s(i) * s(j);
  }
  for (const auto& [m, c] : higher) v += std::popcount(m & neg) % 2 ? -c : c;
  return v;
}

namespace {

void check_ising(const MixtureModel& model, std::size_t N) {
  if (model.dim() != 1 || model.spins().kind != SpinDistribution::Kind::ising)
    throw UnsupportedDimension("montecarlo enumerates Ising spins only");
  if (N == 0) throw ValidationError("montecarlo: N must be >= 1");
  if (N > kMaxSpins) throw SizeLimit("N = " + std::to_string(N) + " exceeds the enumeration cap of 22");
}

// Stream keys: H_N degree p uses derive(sample_key, p); the Potts couplings
// and the enrichment field get their own branches.
constexpr std::uint64_t kPottsBranch = 0x9077;
constexpr std::uint64_t kFieldBranch = 0xF1E1D;

}  // namespace

Couplings hamiltonian(const MixtureModel& model, std::size_t N, std::uint64_t seed, std::uint64_t sample) {
  check_ising(model, N);
  Couplings h(N);
  const rng::Key sk = rng::derive(seed, sample);
  std::map<std::uint32_t, double> higher;
  for (const PowerTerm& term : model.terms()) {
    const int p = term.degree;
    if (term.coeff == 0.0) continue;
    const double tuples = std::pow(static_cast<double>(N), p);
    if (tuples > 5e7) throw SizeLimit("degree " + std::to_string(p) + " tensor too large for N = " + std::to_string(N));
    const double scale = std::sqrt(term.coeff) * std::pow(static_cast<double>(N), -(p - 1) / 2.0);
    const rng::Key key = rng::derive(sk, static_cast<std::uint64_t>(p));
    const auto count = static_cast<std::uint64_t>(tuples);
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    for (std::uint64_t lin = 0; lin < count; ++lin) {
      // idx is the base-N expansion of lin.
      std::uint64_t r = lin;
      std::uint32_t mask = 0;
      for (int k = 0; k < p; ++k) {
        idx[static_cast<std::size_t>(k)] = r % N;
        r /= N;
        mask ^= 1u << idx[static_cast<std::size_t>(k)];
      }
      const double g = scale * rng::normal_at(key, lin);
      const int order = std::popcount(mask);
      if (order == 0) {
        h.constant += g;
      } else if (order == 1) {
        h.field[static_cast<std::size_t>(std::countr_zero(mask))] += g;
      } else if (order == 2) {
        const auto i = static_cast<std::size_t>(std::countr_zero(mask));
        const auto j = static_cast<std::size_t>(31 - std::countl_zero(mask));
        h.add_pair(i, j, g);
      } else {
        higher[mask] += g;
      }
    }
  }
  h.higher.assign(higher.begin(), higher.end());
  return h;
}

Couplings potts_hamiltonian(std::size_t N, std::uint64_t seed, std::uint64_t sample) {
  if (N == 0 || N > kMaxSpins) throw SizeLimit("Potts term: N out of range");
  Couplings h(N);
  const rng::Key key = rng::derive(rng::derive(seed, sample), kPottsBranch);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) h.add_pair(i, j, scale * rng::normal_at(key, i * N + j));
  return h;
}

double log_partition(const Couplings& x) {
  const std::size_t N = x.N;
  if (N == 0 || N > kMaxSpins) throw SizeLimit("log_partition: N out of range");
  const kernels::KernelTable& K = kernels::active();

  // Start from all spins +1; h_i = field_i + sum_j J_ij s_j.
  std::vector<double> s(N, 1.0), h(N);
  double v = x.constant;
  for (std::size_t i = 0; i < N; ++i) {
    v += x.field[i];
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) row += x.pair[i * N + j];
    h[i] = x.field[i] + row;
    for (std::size_t j = i + 1; j < N; ++j) v += x.pair[i * N + j];
  }
  std::vector<double> hv(x.higher.size());
  std::vector<std::vector<std::size_t>> touching(N);
  for (std::size_t k = 0; k < x.higher.size(); ++k) {
    hv[k] = x.higher[k].second;
    v += hv[k];
    for (std::size_t i = 0; i < N; ++i)
      if ((x.higher[k].first >> i) & 1u) touching[i].push_back(k);
  }

  constexpr std::size_t kBlock = 4096;
  std::vector<double> buf;
  buf.reserve(kBlock);
  double run_max = -std::numeric_limits<double>::infinity(), run_sum = 0.0;
  auto flush = [&] {
    if (buf.empty()) return;
    const double m = K.max(buf.data(), buf.size());
    const double sm = K.sum_exp(buf.data(), buf.size(), m);
    if (m > run_max) {
      run_sum = run_sum * std::exp(run_max - m) + sm;
      run_max = m;
    } else {
      run_sum += sm * std::exp(m - run_max);
    }
    buf.clear();
  };

  const std::uint64_t total = std::uint64_t{1} << N;
  buf.push_back(v);
  for (std::uint64_t g = 1; g < total; ++g) {
    const auto k = static_cast<std::size_t>(std::countr_zero(g));
    const double sk = s[k];
    v -= 2.0 * sk * h[k];
    for (std::size_t t : touching[k]) {
      v -= 2.0 * hv[t];
      hv[t] = -hv[t];
    }
    // Every other local field moves by -2 s_k J_jk.
    K.axpy(-2.0 * sk, x.pair.data() + k * N, h.data(), N);
    s[k] = -sk;
    buf.push_back(v);
    if (buf.size() == kBlock) flush();
  }
  flush();
  return run_max + std::log(run_sum);
}

namespace {

FreeEnergyEstimate summarize(FreeEnergyEstimate est) {
  const par::MeanStderr ms = par::mean_stderr(est.values);
  est.mean = ms.mean;
  est.stderr_ = ms.stderr_;
  return est;
}

// -(1/N) [log sum_s exp(X) - N log 2 - N t xi(1) - N q].
double free_energy_one(const MixtureModel& model, double t, double q, std::size_t N, std::uint64_t seed,
                       std::uint64_t sample, const Couplings* potts, double alpha) {
  if (t == 0.0 && q == 0.0) return 0.0;
  Couplings x = hamiltonian(model, N, seed, sample);
  if (potts && alpha > 0.0) {
    const double sa = std::sqrt(alpha);
    x.constant += sa * potts->constant;
    for (std::size_t i = 0; i < x.pair.size(); ++i) x.pair[i] += sa * potts->pair[i];
  }
  x.scale(std::sqrt(2.0 * t));
  if (q > 0.0) {
    const rng::Key fk = rng::derive(rng::derive(seed, sample), kFieldBranch);
    const double a = std::sqrt(2.0 * q);
    for (std::size_t i = 0; i < N; ++i) x.field[i] += a * rng::normal_at(fk, i);
  }
  const double n = static_cast<double>(N);
  const double xi1 = model.xi(1.0) + (potts ? alpha : 0.0);
  return -(log_partition(x) - n * std::log(2.0) - n * t * xi1 - n * q) / n;
}

}  // namespace

FreeEnergyEstimate sample_free_energy(const MixtureModel& model, double t, std::size_t N, std::size_t n_samples,
                                      std::uint64_t seed) {
  check_ising(model, N);
  if (!(t >= 0.0)) throw ValidationError("sample_free_energy: t must be >= 0");
  if (n_samples < 2) throw ValidationError("sample_free_energy: need at least 2 samples");
  FreeEnergyEstimate est;
  est.t = t;
  est.N = N;
  est.n_samples = n_samples;
  est.seed = seed;
  est.values.resize(n_samples);
  par::parallel_for(n_samples, [&](std::size_t r) {
    est.values[r] = free_energy_one(model, t, 0.0, N, seed, r, nullptr, 0.0);
  });
  return summarize(std::move(est));
}

FreeEnergyEstimate enriched_free_energy(const MixtureModel& model, double t, double q, std::size_t N,
                                        std::size_t n_samples, std::uint64_t seed, bool exact_z_average) {
  check_ising(model, N);
  if (!(t >= 0.0)) throw ValidationError("enriched_free_energy: t must be >= 0");
  if (!(q >= 0.0) || !std::isfinite(q)) throw ValidationError("enriched_free_energy: q must be >= 0");
  if (n_samples < 2) throw ValidationError("enriched_free_energy: need at least 2 samples");
  FreeEnergyEstimate est;
  est.t = t;
  est.N = N;
  est.n_samples = n_samples;
  est.seed = seed;
  est.mode = "enriched";
  est.q = q;
  if (exact_z_average) {
    if (t != 0.0) throw ValidationError("enriched_free_energy: the exact z average needs t = 0");
    // At t = 0 the sum over s factorizes over sites:
    // -(1/N) sum_i [log 2 cosh(sqrt(2q) z_i) - log 2 - q], averaged over z.
    const quad::Rule& r = quad::gauss_hermite(200);
    const double a = std::sqrt(2.0 * q);
    double s = 0.0;
    for (std::size_t g = 0; g < r.nodes.size(); ++g) {
      const double u = std::abs(a * r.nodes[g]);
      s += r.weights[g] * (u + std::log1p(std::exp(-2.0 * u)) - std::log(2.0));
    }
    est.values.assign(n_samples, q - s);
    est.mean = q - s;
    est.stderr_ = 0.0;
    return est;
  }
  est.values.resize(n_samples);
  par::parallel_for(n_samples, [&](std::size_t r) {
    est.values[r] = free_energy_one(model, t, q, N, seed, r, nullptr, 0.0);
  });
  return summarize(std::move(est));
}

std::vector<CovarianceRow> covariance_check(const MixtureModel& model, std::size_t N, std::size_t n_samples,
                                            std::uint64_t seed,
                                            const std::vector<std::pair<std::vector<int>, std::vector<int>>>& probes,
                                            double bands) {
  check_ising(model, N);
  if (n_samples < 2) throw ValidationError("covariance_check: need at least 2 samples");
  auto to_mask = [N](const std::vector<int>& s) {
    if (s.size() != N) throw ValidationError("covariance_check: probe length must equal N");
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (s[i] != 1 && s[i] != -1) throw ValidationError("covariance_check: probes must be +-1");
      if (s[i] == -1) m |= 1u << i;
    }
    return m;
  };
  std::vector<std::pair<std::uint32_t, std::uint32_t>> masks;
  for (const auto& [a, b] : probes) masks.push_back({to_mask(a), to_mask(b)});
  std::vector<std::vector<double>> prod(probes.size(), std::vector<double>(n_samples));
  par::parallel_for(n_samples, [&](std::size_t r) {
    const Couplings h = hamiltonian(model, N, seed, r);
    for (std::size_t k = 0; k < masks.size(); ++k) prod[k][r] = h.evaluate(masks[k].first) * h.evaluate(masks[k].second);
  });
  std::vector<CovarianceRow> rows;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    CovarianceRow row;
    double dot = 0.0;
    for (std::size_t i = 0; i < N; ++i) dot += probes[k].first[i] * probes[k].second[i];
    row.overlap = dot / static_cast<double>(N);
    row.target = static_cast<double>(N) * model.xi(row.overlap);
    const par::MeanStderr ms = par::mean_stderr(prod[k]);
    row.mean = ms.mean;
    row.stderr_ = ms.stderr_;
    row.within = std::abs(row.mean - row.target) <= bands * row.stderr_ + 1e-12;
    rows.push_back(row);
  }
  return rows;
}

PottsReport potts_perturbation_check(const MixtureModel& model, double t, std::size_t N,
                                     const std::vector<double>& alphas, std::size_t n_samples, std::uint64_t seed) {
  check_ising(model, N);
  if (!(t >= 0.0)) throw ValidationError("potts_perturbation_check: t must be >= 0");
  if (n_samples < 2) throw ValidationError("potts_perturbation_check: need at least 2 samples");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("potts_perturbation_check: alphas must lie in [0, 1]");
  PottsReport rep;
  rep.bound = t;
  const std::size_t A = alphas.size();
  std::vector<std::vector<double>> vals(A, std::vector<double>(n_samples));
  par::parallel_for(n_samples, [&](std::size_t r) {
    const Couplings potts = potts_hamiltonian(N, seed, r);
    for (std::size_t a = 0; a < A; ++a) vals[a][r] = free_energy_one(model, t, 0.0, N, seed, r, &potts, alphas[a]);
  });
  for (std::size_t a = 0; a < A; ++a) {
    const par::MeanStderr ms = par::mean_stderr(vals[a]);
    rep.rows.push_back({alphas[a], ms.mean, ms.stderr_});
  }
  for (std::size_t a = 0; a + 1 < A; ++a) {
    std::vector<double> d(n_samples);
    for (std::size_t r = 0; r < n_samples; ++r) d[r] = vals[a + 1][r] - vals[a][r];
    const par::MeanStderr ms = par::mean_stderr(d);
    PottsStep st;
    st.alpha0 = alphas[a];
    st.alpha1 = alphas[a + 1];
    st.diff = ms.mean;
    st.diff_stderr = ms.stderr_;
    const double da = std::abs(st.alpha1 - st.alpha0);
    st.slope = da > 0.0 ? std::abs(st.diff) / da : 0.0;
    st.within = std::abs(st.diff) <= rep.bound * da + 4.0 * st.diff_stderr + 1e-12;
    rep.within_bound = rep.within_bound && st.within;
    if (st.alpha1 > st.alpha0 && st.diff < -4.0 * st.diff_stderr - 1e-12) rep.monotone = false;
    if (st.alpha1 < st.alpha0 && st.diff > 4.0 * st.diff_stderr + 1e-12) rep.monotone = false;
    rep.steps.push_back(st);
  }
  return rep;
}

}  // namespace parisi::mc
