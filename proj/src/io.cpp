#include "parisi/io.hpp"

#include <fstream>
#include <sstream>

#include "parisi/errors.hpp"

namespace parisi::io {

namespace {

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("json: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("json: bad field '") + key + "': " + e.what());
  }
}

}  // namespace

MixtureModel model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model: expected an object");
  if (j.contains("name")) {
    const auto name = get<std::string>(j, "name");
    if (name == "sk") return MixtureModel::sk();
    throw ValidationError("model: unknown name '" + name + "'");
  }
  std::vector<PowerTerm> terms;
  for (const auto& t : get<json>(j, "terms")) terms.push_back({get<int>(t, "degree"), get<double>(t, "coeff")});
  const std::size_t dim = j.value("dim", std::size_t{1});
  SpinDistribution spins = SpinDistribution::ising();
  if (j.contains("spins")) {
    const json& s = j.at("spins");
    const auto kind = get<std::string>(s, "kind");
    if (kind == "atoms") {
      spins = SpinDistribution::atoms(get<std::vector<std::vector<double>>>(s, "values"),
                                      get<std::vector<double>>(s, "weights"));
    } else if (kind != "ising") {
      throw ValidationError("model: unknown spin kind '" + kind + "'");
    }
  }
  return MixtureModel(terms, dim, spins);
}

json to_json(const MixtureModel& m) {
  json j;
  j["terms"] = json::array();
  for (const auto& t : m.terms()) j["terms"].push_back({{"degree", t.degree}, {"coeff", t.coeff}});
  j["dim"] = m.dim();
  if (m.spins().kind == SpinDistribution::Kind::ising) {
    j["spins"] = {{"kind", "ising"}};
  } else {
    j["spins"] = {{"kind", "atoms"}, {"values", m.spins().values}, {"weights", m.spins().weights}};
  }
  return j;
}

DiscreteMeasure measure_from_json(const json& j) {
  return DiscreteMeasure(get<std::vector<double>>(j, "atoms"), get<std::vector<double>>(j, "weights"));
}

json to_json(const DiscreteMeasure& mu) { return {{"atoms", mu.atoms()}, {"weights", mu.weights()}}; }

PLConvexFn chi_from_json(const json& j) {
  return PLConvexFn(get<std::vector<double>>(j, "knots"), get<std::vector<double>>(j, "slopes"));
}

json to_json(const PLConvexFn& chi) { return {{"knots", chi.knots()}, {"slopes", chi.slopes()}}; }

json to_json(const PsiValue& v) {
  json j{{"value", v.value + 0.0}, {"method", to_string(v.method)}, {"stderr", v.stderr_}};
  if (v.method == PsiValue::Method::recursion) {
    j["quad_order"] = v.quad_order;
  } else {
    j["replicates"] = v.replicates;
    j["truncation_warning"] = v.truncation_warning;
    j["truncated_mass_bound"] = v.truncated_mass_bound;
  }
  return j;
}

json to_json(const SolverReport& r) {
  json j{{"t", r.t},
         {"lower", r.lower},
         {"lower_argmax", to_json(r.lower_argmax)},
         {"upper", r.upper},
         {"upper_argmin", to_json(r.upper_argmin)},
         {"gap", r.gap},
         {"iterations", r.iterations},
         {"restarts", r.restarts},
         {"family_size", r.family_size},
         {"seed", r.seed},
         {"cut_tol", r.cut_tol},
         {"psi_star_family_bound", r.psi_star_family_bound},
         {"nonconvergence", r.nonconvergence}};
  return j;
}

json load(const std::string& path_or_text) {
  try {
    const auto first = path_or_text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (path_or_text[first] == '{' || path_or_text[first] == '['))
      return json::parse(path_or_text);
    std::ifstream in(path_or_text);
    if (!in) throw ValidationError("cannot open '" + path_or_text + "'");
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("json parse error: ") + e.what());
  }
}

}  // namespace parisi::io
