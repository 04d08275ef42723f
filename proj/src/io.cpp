#include "msgame/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace msgame::io {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("cannot write " + path);
}

json parse_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("invalid JSON in " + path);
  return j;
}

namespace {

json edges_of(const Matrix& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out.push_back({i, j, m(i, j)});
  return out;
}

Matrix edges_to_matrix(const json& edges, int n, const std::string& where) {
  if (!edges.is_array()) throw FormatError(where + ": expected an array of [i, j, w] triplets");
  Matrix m = Matrix::Zero(n, n);
  for (const json& e : edges) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number())
      throw FormatError(where + ": expected [i, j, w] triplets");
    const int i = e[0].get<int>(), j = e[1].get<int>();
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw FormatError(where + ": edge index out of range");
    if (i == j) throw FormatError(where + ": diagonal entries are not allowed");
    m(i, j) = e[2].get<double>();
  }
  return m;
}

Vector vector_field(const json& j, const std::string& name, int n) {
  if (!j.contains(name)) throw FormatError(name + ": missing required field");
  const json& f = j.at(name);
  if (!f.is_array() || static_cast<int>(f.size()) != n)
    throw FormatError(name + ": expected an array of " + std::to_string(n) + " numbers");
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    if (!f[i].is_number()) throw FormatError(name + ": expected numbers");
    v[i] = f[i].get<double>();
  }
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

json game_to_json(const MultiScaleGame& g) {
  json j;
  j["levels"] = g.n_levels;
  json parts = json::array(), within = json::array();
  for (const HierarchyLevel& hl : g.levels) {
    json p = json::array(), w = json::array();
    for (const auto& grp : hl.groups) p.push_back(grp);
    for (const Matrix& m : hl.within) w.push_back(edges_of(m));
    parts.push_back(p);
    within.push_back(w);
  }
  j["partitions"] = parts;
  j["within_group_edges"] = within;
  j["top_level_edges"] = edges_of(g.top);
  j["a"] = vector_to_json(g.params.a);
  j["b"] = vector_to_json(g.params.b);
  j["c"] = vector_to_json(g.params.c);
  j["kappa"] = vector_to_json(g.params.kappa);
  json boxes = json::array();
  for (const ActionBox& b : g.boxes) boxes.push_back({b.lo, b.hi});
  j["boxes"] = boxes;
  bool any_ben = false;
  for (const Vector& v : g.params.level_benefit)
    if (v.size() && v.cwiseAbs().maxCoeff() > 0.0) any_ben = true;
  if (any_ben) {
    json ben = json::array();
    for (int l = 2; l <= g.n_levels; ++l) {
      if (l - 2 < static_cast<int>(g.params.level_benefit.size()) &&
          g.params.level_benefit[l - 2].size())
        ben.push_back(vector_to_json(g.params.level_benefit[l - 2]));
      else
        ben.push_back(vector_to_json(Vector::Zero(g.level_count(l))));
    }
    j["level_benefits"] = ben;
  }
  bool any_exp = false;
  for (char e : g.params.group_exp) any_exp = any_exp || e;
  if (any_exp) {
    json ge = json::array();
    for (int l = 2; l <= g.n_levels; ++l) {
      const bool on =
          l - 2 < static_cast<int>(g.params.group_exp.size()) && g.params.group_exp[l - 2];
      ge.push_back({{"enabled", on}, {"kappa", on ? g.params.group_kappa[l - 2] : 0.0}});
    }
    j["group_exponential"] = ge;
  }
  return j;
}

MultiScaleGame game_from_json(const json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw FormatError("game: expected a JSON object");
  static const std::set<std::string> known = {
      "levels",          "partitions", "within_group_edges", "top_level_edges",
      "a",               "b",          "c",                  "kappa",
      "boxes",           "level_benefits", "group_exponential"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()) && warnings)
      warnings->push_back("unknown field ignored: " + it.key());

  if (!j.contains("levels") || !j.at("levels").is_number_integer())
    throw FormatError("levels: missing or not an integer");
  const int L = j.at("levels").get<int>();
  if (L < 1) throw FormatError("levels: must be at least 1");

  MultiScaleGame g;
  g.n_levels = L;
  const json parts = j.value("partitions", json::array());
  const json within = j.value("within_group_edges", json::array());
  if (static_cast<int>(parts.size()) != L - 1)
    throw FormatError("partitions: expected one entry per level 2.." + std::to_string(L));
  if (static_cast<int>(within.size()) != L - 1)
    throw FormatError("within_group_edges: expected one entry per level 2.." + std::to_string(L));
  for (int l = 2; l <= L; ++l) {
    const json& p = parts[l - 2];
    const json& w = within[l - 2];
    if (!p.is_array() || p.empty()) throw FormatError("partitions: each level needs groups");
    if (!w.is_array() || w.size() != p.size())
      throw FormatError("within_group_edges: one edge list per group");
    HierarchyLevel hl;
    for (size_t k = 0; k < p.size(); ++k) {
      if (!p[k].is_array()) throw FormatError("partitions: groups must be index arrays");
      std::vector<int> grp;
      for (const json& e : p[k]) {
        if (!e.is_number_integer()) throw FormatError("partitions: indices must be integers");
        grp.push_back(e.get<int>());
      }
      hl.within.push_back(
          edges_to_matrix(w[k], static_cast<int>(grp.size()), "within_group_edges"));
      hl.groups.push_back(std::move(grp));
    }
    g.levels.push_back(std::move(hl));
  }

  int n = 0;
  if (L == 1) {
    if (!j.contains("b") || !j.at("b").is_array())
      throw FormatError("b: missing required field");
    n = static_cast<int>(j.at("b").size());
  } else {
    for (const auto& grp : g.levels[0].groups) n += static_cast<int>(grp.size());
  }
  g.n_leaves = n;
  const int top_n = L == 1 ? n : static_cast<int>(g.levels[L - 2].groups.size());
  g.top = edges_to_matrix(j.value("top_level_edges", json::array()), top_n, "top_level_edges");

  g.params.b = vector_field(j, "b", n);
  g.params.c = vector_field(j, "c", n);
  g.params.a = j.contains("a") ? vector_field(j, "a", n) : Vector::Zero(n);
  g.params.kappa = j.contains("kappa") ? vector_field(j, "kappa", n) : Vector::Zero(n);

  g.boxes.assign(n, ActionBox{});
  if (j.contains("boxes")) {
    const json& bx = j.at("boxes");
    if (!bx.is_array() || static_cast<int>(bx.size()) != n)
      throw FormatError("boxes: expected one [lo, hi] pair per agent");
    for (int i = 0; i < n; ++i) {
      if (!bx[i].is_array() || bx[i].size() != 2 || !bx[i][0].is_number() || !bx[i][1].is_number())
        throw FormatError("boxes: expected [lo, hi] pairs");
      g.boxes[i] = {bx[i][0].get<double>(), bx[i][1].get<double>()};
    }
  }

  if (j.contains("level_benefits")) {
    const json& ben = j.at("level_benefits");
    if (!ben.is_array() || static_cast<int>(ben.size()) != L - 1)
      throw FormatError("level_benefits: expected one array per level 2.." + std::to_string(L));
    for (int l = 2; l <= L; ++l) {
      const int m = static_cast<int>(g.levels[l - 2].groups.size());
      const json& v = ben[l - 2];
      if (!v.is_array() || static_cast<int>(v.size()) != m)
        throw FormatError("level_benefits: size mismatch at level " + std::to_string(l));
      Vector b(m);
      for (int k = 0; k < m; ++k) {
        if (!v[k].is_number()) throw FormatError("level_benefits: expected numbers");
        b[k] = v[k].get<double>();
      }
      g.params.level_benefit.push_back(std::move(b));
    }
  }

  if (j.contains("group_exponential")) {
    const json& ge = j.at("group_exponential");
    if (!ge.is_array() || static_cast<int>(ge.size()) != L - 1)
      throw FormatError("group_exponential: expected one entry per level 2.." + std::to_string(L));
    g.params.group_exp.assign(L - 1, 0);
    g.params.group_kappa.assign(L - 1, 0.0);
    for (int l = 2; l <= L; ++l) {
      const json& e = ge[l - 2];
      if (!e.is_object() || !e.contains("enabled") || !e.at("enabled").is_boolean())
        throw FormatError("group_exponential: expected {enabled, kappa} objects");
      g.params.group_exp[l - 2] = e.at("enabled").get<bool>() ? 1 : 0;
      if (e.contains("kappa")) {
        if (!e.at("kappa").is_number()) throw FormatError("group_exponential: kappa not a number");
        g.params.group_kappa[l - 2] = e.at("kappa").get<double>();
      }
    }
  }

  finalize(g);
  const auto errs = msgame::validate(g);
  if (!errs.empty()) throw FormatError(errs.front().where + ": " + errs.front().what);
  return g;
}

void write_game(const std::string& path, const MultiScaleGame& g) {
  write_text_file(path, game_to_json(g).dump(2) + "\n");
}

MultiScaleGame read_game(const std::string& path, std::vector<std::string>* warnings) {
  return game_from_json(parse_json_file(path), warnings);
}

json certificate_to_json(const UniquenessCertificate& cert) {
  json j;
  j["n"] = cert.n;
  j["rho_gamma"] = cert.spectral_radius_gamma;
  j["rho_is_bound"] = cert.rho_is_bound;
  j["sdd"] = cert.sdd;
  j["wcdd"] = cert.wcdd;
  j["p_gamma"] = cert.p_gamma;
  j["p_upsilon_exact"] =
      cert.p_upsilon_exact ? json(*cert.p_upsilon_exact) : json(nullptr);
  return j;
}

json report_to_json(const SolverReport& rep) {
  json j;
  j["algorithm"] = algorithm_name(rep.algorithm);
  j["converged"] = rep.converged;
  j["timed_out"] = rep.timed_out;
  j["sweeps"] = rep.sweeps;
  j["flops"] = rep.flops;
  j["residual_inf"] = rep.residual_inf;
  j["boundary_hits"] = rep.boundary_hits;
  j["lqp_disabled"] = rep.lqp_disabled;
  j["x"] = vector_to_json(rep.x);
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  return j;
}

json verdict_to_json(const ConsistencyVerdict& v) {
  json j;
  j["consistent"] = v.consistent;
  j["max_gap"] = v.max_gap;
  j["c_star"] = vector_to_json(v.c_star);
  return j;
}

}  // namespace msgame::io
