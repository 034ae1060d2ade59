#pragma once

// Sectioned key-value text format shared by environment, solution and
// experiment-config files.
//
//   # comment
//   [section]
//   key = value
//   0.25 0.75        <- numeric data row
//
// Environment files:
//   [meta]        kind = tabular | linear, S, A, d (linear only), initial_state
//   [transition]  tabular: S*A rows of S probabilities, row index s*A + a
//   [reward]      tabular: S rows of A rewards
//   [features]    linear:  S*A rows of d entries, row index s*A + a
//   [measures]    linear:  d rows of S entries
//   [theta]       linear:  one row of d entries
//
// Floats are written with 17 significant digits so files round-trip exactly.

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cvi/envs.hpp"
#include "cvi/errors.hpp"
#include "cvi/mdp.hpp"
#include "cvi/oracle.hpp"

namespace cvi {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct KvSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::vector<double>> rows;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries)
      if (k == key) {
        v = std::move(value);
        return;
      }
    entries.emplace_back(key, std::move(value));
  }
};

class KvDocument {
 public:
  std::vector<KvSection> sections;

  const KvSection* section(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
  KvSection& section_mut(const std::string& name) {
    for (auto& s : sections)
      if (s.name == name) return s;
    sections.push_back({name, {}, {}});
    return sections.back();
  }
  const KvSection& require(const std::string& name) const {
    const auto* s = section(name);
    if (!s) throw ConfigError("missing section [" + name + "]");
    return *s;
  }

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    const auto* s = section(sec);
    if (!s) return std::nullopt;
    const auto* v = s->find(key);
    if (!v) return std::nullopt;
    return *v;
  }

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
      const auto& s = sections[i];
      if (i) out << "\n";
      out << "[" << s.name << "]\n";
      for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
      for (const auto& row : s.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << format_double(row[j]);
        out << "\n";
      }
    }
    return out.str();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& token, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double x = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse number '" + token + "'");
  }
}

}  // namespace detail

inline KvDocument parse_kv(std::istream& in) {
  KvDocument doc;
  KvSection* current = nullptr;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      doc.sections.push_back({detail::trim(line.substr(1, line.size() - 2)), {}, {}});
      current = &doc.sections.back();
      continue;
    }
    if (!current) throw ConfigError("line " + std::to_string(line_no) + ": content before first section");
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      current->set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
      continue;
    }
    std::istringstream tokens(line);
    std::vector<double> row;
    std::string tok;
    while (tokens >> tok) row.push_back(detail::parse_double(tok, line_no));
    current->rows.push_back(std::move(row));
  }
  return doc;
}

inline KvDocument parse_kv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_kv(in);
}

inline KvDocument read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_kv(in);
}

inline std::size_t parse_size(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + text + "' as a nonnegative integer");
  }
}

inline double parse_real(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + text + "' as a number");
  }
}

inline KvDocument to_document(const TabularMDP& mdp) {
  KvDocument doc;
  auto& meta = doc.section_mut("meta");
  meta.set("kind", "tabular");
  meta.set("S", std::to_string(mdp.num_states()));
  meta.set("A", std::to_string(mdp.num_actions()));
  meta.set("initial_state", std::to_string(mdp.initial_state()));
  auto& tr = doc.section_mut("transition");
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.row(s, a);
      tr.rows.emplace_back(row.begin(), row.end());
    }
  auto& rw = doc.section_mut("reward");
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    std::vector<double> row(mdp.num_actions());
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) row[a] = mdp.reward(s, a);
    rw.rows.push_back(std::move(row));
  }
  return doc;
}

inline KvDocument to_document(const LinearMDPEnv& env) {
  KvDocument doc;
  auto& meta = doc.section_mut("meta");
  meta.set("kind", "linear");
  meta.set("S", std::to_string(env.num_states));
  meta.set("A", std::to_string(env.num_actions));
  meta.set("d", std::to_string(env.dim()));
  meta.set("initial_state", std::to_string(env.initial_state));
  auto matrix_rows = [](const Eigen::MatrixXd& m, KvSection& sec) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
      sec.rows.push_back(std::move(row));
    }
  };
  matrix_rows(env.features, doc.section_mut("features"));
  matrix_rows(env.measures, doc.section_mut("measures"));
  auto& th = doc.section_mut("theta");
  th.rows.emplace_back(env.theta.data(), env.theta.data() + env.theta.size());
  return doc;
}

inline KvDocument to_document(const Environment& env) {
  return std::visit([](const auto& e) { return to_document(e); }, env);
}

namespace detail {

inline const std::vector<std::vector<double>>& rows_of(const KvDocument& doc, const std::string& name,
                                                       std::size_t count, std::size_t width) {
  const auto& sec = doc.require(name);
  if (sec.rows.size() != count)
    throw ConfigError("[" + name + "] expects " + std::to_string(count) + " rows, found " + std::to_string(sec.rows.size()));
  for (const auto& r : sec.rows)
    if (r.size() != width)
      throw ConfigError("[" + name + "] expects rows of " + std::to_string(width) + " entries");
  return sec.rows;
}

}  // namespace detail

inline Environment environment_from_document(const KvDocument& doc) {
  const auto& meta = doc.require("meta");
  auto need = [&](const std::string& key) {
    const auto* v = meta.find(key);
    if (!v) throw ConfigError("[meta] missing key '" + key + "'");
    return *v;
  };
  const std::string kind = need("kind");
  const std::size_t S = parse_size(need("S"), "S");
  const std::size_t A = parse_size(need("A"), "A");
  const std::size_t init = meta.find("initial_state") ? parse_size(*meta.find("initial_state"), "initial_state") : 0;
  if (S == 0 || A == 0) throw ConfigError("[meta] S and A must be positive");
  if (kind == "tabular") {
    TabularMDP mdp(S, A, init);
    const auto& tr = detail::rows_of(doc, "transition", S * A, S);
    const auto& rw = detail::rows_of(doc, "reward", S, A);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t n = 0; n < S; ++n) mdp.transition(s, a, n) = tr[s * A + a][n];
        mdp.reward(s, a) = rw[s][a];
      }
    return mdp;
  }
  if (kind == "linear") {
    const std::size_t d = parse_size(need("d"), "d");
    if (d == 0) throw ConfigError("[meta] d must be positive");
    LinearMDPEnv env;
    env.num_states = S;
    env.num_actions = A;
    env.initial_state = init;
    const auto di = static_cast<Eigen::Index>(d);
    env.features.resize(static_cast<Eigen::Index>(S * A), di);
    env.measures.resize(di, static_cast<Eigen::Index>(S));
    env.theta.resize(di);
    const auto& f = detail::rows_of(doc, "features", S * A, d);
    const auto& m = detail::rows_of(doc, "measures", d, S);
    const auto& th = detail::rows_of(doc, "theta", 1, d);
    for (std::size_t i = 0; i < S * A; ++i)
      for (std::size_t j = 0; j < d; ++j) env.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[i][j];
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t n = 0; n < S; ++n) env.measures(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = m[j][n];
    for (std::size_t j = 0; j < d; ++j) env.theta(static_cast<Eigen::Index>(j)) = th[0][j];
    return env;
  }
  throw ConfigError("[meta] unknown kind '" + kind + "'");
}

inline std::string write_environment(const Environment& env) { return to_document(env).to_string(); }

inline Environment read_environment_string(const std::string& text) {
  return environment_from_document(parse_kv_string(text));
}

inline Environment read_environment_file(const std::string& path) {
  return environment_from_document(read_kv_file(path));
}

inline KvDocument to_document(const OracleSolution& sol) {
  KvDocument doc;
  auto& meta = doc.section_mut("solution");
  meta.set("j_star", format_double(sol.j_star));
  meta.set("span_v_star", format_double(sol.span_v_star));
  meta.set("gamma", format_double(sol.gamma_used));
  doc.section_mut("v_star").rows.push_back(sol.v_star);
  doc.section_mut("q_star").rows.push_back(sol.q_star);
  doc.section_mut("discounted_v_star").rows.push_back(sol.discounted_v_star);
  doc.section_mut("discounted_q_star").rows.push_back(sol.discounted_q_star);
  return doc;
}

inline OracleSolution solution_from_document(const KvDocument& doc) {
  OracleSolution sol;
  auto need = [&](const std::string& key) {
    const auto v = doc.get("solution", key);
    if (!v) throw ConfigError("[solution] missing key '" + key + "'");
    return parse_real(*v, key);
  };
  sol.j_star = need("j_star");
  sol.span_v_star = need("span_v_star");
  sol.gamma_used = need("gamma");
  auto vec = [&](const std::string& name) {
    const auto& sec = doc.require(name);
    if (sec.rows.size() != 1) throw ConfigError("[" + name + "] expects one row");
    return sec.rows.front();
  };
  sol.v_star = vec("v_star");
  sol.q_star = vec("q_star");
  sol.discounted_v_star = vec("discounted_v_star");
  sol.discounted_q_star = vec("discounted_q_star");
  return sol;
}

}  // namespace cvi
