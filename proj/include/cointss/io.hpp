#pragma once

// JSON model documents and CSV path files. Documents are parsed in full
// before any model is built, so every problem is reported at once.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cointss/model.hpp"
#include "cointss/realization.hpp"

namespace cointss {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

enum class ModelKind { state_space, mcarma, canonical };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::state_space: return "state_space";
    case ModelKind::mcarma: return "mcarma";
    case ModelKind::canonical: return "canonical";
  }
  return "unknown";
}

struct SamplingSpec {
  std::optional<double> h;
  std::optional<long> n_steps;
  std::optional<std::uint64_t> seed;
  std::optional<long> refinement;
  std::optional<long> burn_in;
  std::optional<Vector> x1_0;
  std::optional<std::string> method;
};

/// Solver settings a document may carry; command-line flags take precedence.
struct SolverSettings {
  std::optional<double> riccati_tol;
  std::optional<long> max_iter;
  std::optional<double> rank_tol;
  std::optional<double> root_tol;
  std::optional<int> J;
};

struct ModelDocument {
  std::string schema_version = kSchemaVersion;
  ModelKind kind = ModelKind::canonical;
  std::optional<StateSpaceModel> state_space;
  std::optional<McarmaModel> mcarma;
  std::optional<CointCanonicalForm> canonical;
  SamplingSpec sampling;
  SolverSettings options;
};

/// Accumulates input problems; `raise` throws them as one validation error
/// with one problem per line.
class Issues {
 public:
  void add(std::string what) { list_.push_back(std::move(what)); }
  bool empty() const { return list_.empty(); }
  const std::vector<std::string>& list() const { return list_; }

  void raise() const {
    if (list_.empty()) return;
    std::string msg;
    for (const auto& s : list_) {
      if (!msg.empty()) msg += "\n";
      msg += s;
    }
    fail(ErrorKind::validation, msg);
  }

 private:
  std::vector<std::string> list_;
};

// ---------------------------------------------------------------- JSON out

// -0.0 prints as "-0.0"; it compares equal to 0.0, so drop the sign.
inline double unsign_zero(double x) { return x == 0.0 ? 0.0 : x; }

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(unsign_zero(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(unsign_zero(v(i)));
  return out;
}

inline Json complex_to_json(const Complex& z) {
  return Json::array({unsign_zero(z.real()), unsign_zero(z.imag())});
}

inline Json to_json(const LevySpec& levy) {
  Json j;
  j["kind"] = std::string(to_string(levy.kind));
  switch (levy.kind) {
    case LevyKind::brownian:
      j["sigma_L"] = to_json(levy.sigma_L);
      break;
    case LevyKind::compound_poisson_gaussian_jumps:
      j["jump_rate"] = levy.jump_rate;
      j["jump_cov"] = to_json(levy.jump_cov);
      break;
    case LevyKind::brownian_plus_compound_poisson:
      j["diffusion"] = to_json(levy.diffusion_cov());
      j["jump_rate"] = levy.jump_rate;
      j["jump_cov"] = to_json(levy.jump_cov);
      break;
  }
  return j;
}

inline Json to_json(const CointCanonicalForm& cf) {
  Json j;
  j["c"] = cf.c();
  j["A2"] = to_json(cf.A2());
  j["B1"] = to_json(cf.B1());
  j["B2"] = to_json(cf.B2());
  j["C1"] = to_json(cf.C1());
  j["C2"] = to_json(cf.C2());
  return j;
}

inline Json to_json(const SamplingSpec& s) {
  Json j = Json::object();
  if (s.h) j["h"] = *s.h;
  if (s.n_steps) j["n_steps"] = *s.n_steps;
  if (s.seed) j["seed"] = *s.seed;
  if (s.refinement) j["refinement"] = *s.refinement;
  if (s.burn_in) j["burn_in"] = *s.burn_in;
  if (s.x1_0) j["x1_0"] = to_json(*s.x1_0);
  if (s.method) j["method"] = *s.method;
  return j;
}

/// Canonical-kind document for `cf`, loadable by `parse_document`.
inline Json canonical_document(const CointCanonicalForm& cf,
                               const SamplingSpec& sampling = {}) {
  Json j = to_json(cf);
  j["schema_version"] = kSchemaVersion;
  j["model_kind"] = "canonical";
  j["levy"] = to_json(cf.levy());
  const Json s = to_json(sampling);
  if (!s.empty()) j["sampling"] = s;
  return j;
}

// ----------------------------------------------------------------- JSON in

namespace detail {

inline std::optional<Matrix> read_matrix(const Json& j, const std::string& where,
                                         Issues& issues) {
  if (!j.is_array()) {
    issues.add(where + ": expected a nested array of numbers");
    return std::nullopt;
  }
  if (j.empty()) return Matrix(0, 0);
  Eigen::Index cols = -1;
  for (const auto& row : j) {
    if (!row.is_array()) {
      issues.add(where + ": expected a nested array of numbers");
      return std::nullopt;
    }
    if (cols >= 0 && Eigen::Index(row.size()) != cols) {
      issues.add(where + ": rows have different lengths (not rectangular)");
      return std::nullopt;
    }
    cols = Eigen::Index(row.size());
  }
  Matrix m(Eigen::Index(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& x = j[std::size_t(r)][std::size_t(c)];
      if (!x.is_number()) {
        issues.add(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                   "]: not a number");
        return std::nullopt;
      }
      m(r, c) = x.get<double>();
    }
  }
  return m;
}

inline std::optional<Vector> read_vector(const Json& j, const std::string& where,
                                         Issues& issues) {
  if (!j.is_array()) {
    issues.add(where + ": expected an array of numbers");
    return std::nullopt;
  }
  Vector v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      issues.add(where + "[" + std::to_string(i) + "]: not a number");
      return std::nullopt;
    }
    v(Eigen::Index(i)) = j[i].get<double>();
  }
  return v;
}

inline std::optional<Matrix> required_matrix(const Json& obj, const char* key,
                                             const std::string& prefix,
                                             Issues& issues) {
  if (!obj.contains(key)) {
    issues.add(prefix + key + ": missing");
    return std::nullopt;
  }
  return read_matrix(obj.at(key), prefix + key, issues);
}

inline std::optional<std::vector<Matrix>> matrix_list(const Json& obj, const char* key,
                                                      Issues& issues) {
  if (!obj.contains(key)) {
    issues.add(std::string(key) + ": missing");
    return std::nullopt;
  }
  const Json& j = obj.at(key);
  if (!j.is_array() || j.empty()) {
    issues.add(std::string(key) + ": expected a non-empty array of matrices");
    return std::nullopt;
  }
  std::vector<Matrix> out;
  bool ok = true;
  for (std::size_t k = 0; k < j.size(); ++k) {
    auto m = read_matrix(j[k], std::string(key) + "[" + std::to_string(k) + "]", issues);
    if (m) out.push_back(std::move(*m));
    else ok = false;
  }
  if (!ok) return std::nullopt;
  return out;
}

template <class T>
std::optional<T> read_number(const Json& obj, const char* key,
                             const std::string& prefix, Issues& issues) {
  if (!obj.contains(key)) return std::nullopt;
  const Json& x = obj.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (x.is_number()) return x.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (x.is_number_unsigned()) return x.get<T>();
  } else {
    if (x.is_number_integer()) return x.get<T>();
  }
  issues.add(prefix + key + ": expected " +
             (std::is_floating_point_v<T> ? "a number"
              : std::is_unsigned_v<T>     ? "a nonnegative integer"
                                          : "an integer"));
  return std::nullopt;
}

inline std::optional<LevySpec> read_levy(const Json& doc, Issues& issues) {
  if (!doc.contains("levy") || !doc.at("levy").is_object()) {
    issues.add("levy: missing or not an object");
    return std::nullopt;
  }
  const Json& j = doc.at("levy");
  const std::string kind = j.value("kind", std::string("brownian"));
  std::optional<LevySpec> spec;
  if (kind == "brownian") {
    auto s = required_matrix(j, "sigma_L", "levy.", issues);
    if (s) spec = LevySpec::brownian(*s);
  } else if (kind == "compound_poisson_gaussian_jumps" ||
             kind == "brownian_plus_compound_poisson") {
    auto rate = read_number<double>(j, "jump_rate", "levy.", issues);
    if (!rate && !j.contains("jump_rate")) issues.add("levy.jump_rate: missing");
    auto jc = required_matrix(j, "jump_cov", "levy.", issues);
    if (kind == "compound_poisson_gaussian_jumps") {
      if (rate && jc) spec = LevySpec::compound_poisson(*rate, *jc);
    } else {
      auto diff = required_matrix(j, "diffusion", "levy.", issues);
      if (rate && jc && diff && diff->rows() == jc->rows() && diff->cols() == jc->cols()) {
        spec = LevySpec::brownian_plus_compound_poisson(*diff, *rate, *jc);
      } else if (diff && jc) {
        issues.add("levy.diffusion: must match jump_cov, got " + shape_of(*diff));
      }
    }
  } else {
    issues.add("levy.kind: unknown driver kind '" + kind + "'");
  }
  if (spec) {
    for (const auto& f : validate_levy(*spec).failures) {
      issues.add("levy: " + f + " (driver must have finite, nonsingular second moments)");
    }
    if (!validate_levy(*spec).valid()) return std::nullopt;
  }
  return spec;
}

inline SamplingSpec read_sampling(const Json& doc, Issues& issues) {
  SamplingSpec s;
  if (!doc.contains("sampling")) return s;
  const Json& j = doc.at("sampling");
  if (!j.is_object()) {
    issues.add("sampling: expected an object");
    return s;
  }
  const std::string p = "sampling.";
  s.h = read_number<double>(j, "h", p, issues);
  s.n_steps = read_number<long>(j, "n_steps", p, issues);
  s.seed = read_number<std::uint64_t>(j, "seed", p, issues);
  s.refinement = read_number<long>(j, "refinement", p, issues);
  s.burn_in = read_number<long>(j, "burn_in", p, issues);
  if (j.contains("x1_0")) s.x1_0 = read_vector(j.at("x1_0"), p + "x1_0", issues);
  if (j.contains("method")) {
    if (j.at("method").is_string()) s.method = j.at("method").get<std::string>();
    else issues.add("sampling.method: expected a string");
  }
  if (s.h && !(std::isfinite(*s.h) && *s.h > 0.0)) issues.add("sampling.h: must be positive");
  if (s.n_steps && *s.n_steps < 1) issues.add("sampling.n_steps: must be >= 1");
  if (s.refinement && *s.refinement < 1) issues.add("sampling.refinement: must be >= 1");
  if (s.burn_in && *s.burn_in < 0) issues.add("sampling.burn_in: must be >= 0");
  return s;
}

inline SolverSettings read_options(const Json& doc, Issues& issues) {
  SolverSettings o;
  if (!doc.contains("options")) return o;
  const Json& j = doc.at("options");
  if (!j.is_object()) {
    issues.add("options: expected an object");
    return o;
  }
  const std::string p = "options.";
  o.riccati_tol = read_number<double>(j, "riccati_tol", p, issues);
  o.max_iter = read_number<long>(j, "max_iter", p, issues);
  o.rank_tol = read_number<double>(j, "rank_tol", p, issues);
  o.root_tol = read_number<double>(j, "root_tol", p, issues);
  o.J = read_number<int>(j, "J", p, issues);
  return o;
}

/// Runs a model constructor, turning its error into a document issue.
template <class F>
void build_into(Issues& issues, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    issues.add(std::string("model: ") + e.what());
  }
}

}  // namespace detail

inline ModelDocument parse_document(const Json& doc) {
  Issues issues;
  ModelDocument out;
  if (!doc.is_object()) {
    issues.add("document: expected a JSON object");
    issues.raise();
  }
  if (!doc.contains("schema_version")) {
    issues.add("schema_version: missing");
  } else if (!doc.at("schema_version").is_string() ||
             doc.at("schema_version").get<std::string>() != kSchemaVersion) {
    issues.add(std::string("schema_version: unsupported (expected \"") + kSchemaVersion + "\")");
  }
  const std::string kind = doc.value("model_kind", std::string());
  if (kind == "state_space") out.kind = ModelKind::state_space;
  else if (kind == "mcarma") out.kind = ModelKind::mcarma;
  else if (kind == "canonical") out.kind = ModelKind::canonical;
  else issues.add("model_kind: expected one of state_space, mcarma, canonical");

  auto levy = detail::read_levy(doc, issues);
  out.sampling = detail::read_sampling(doc, issues);
  out.options = detail::read_options(doc, issues);

  if (kind == "state_space") {
    auto a = detail::required_matrix(doc, "A", "", issues);
    auto b = detail::required_matrix(doc, "B", "", issues);
    auto c = detail::required_matrix(doc, "C", "", issues);
    if (a && b && c && levy) {
      detail::build_into(issues, [&] { out.state_space.emplace(*a, *b, *c, *levy); });
    }
  } else if (kind == "mcarma") {
    auto p = detail::matrix_list(doc, "P", issues);
    auto q = detail::matrix_list(doc, "Q", issues);
    if (p && q && levy) {
      detail::build_into(issues, [&] { out.mcarma.emplace(*p, *q, *levy); });
    }
  } else if (kind == "canonical") {
    auto c = detail::read_number<long>(doc, "c", "", issues);
    if (!doc.contains("c")) issues.add("c: missing");
    auto a2 = detail::required_matrix(doc, "A2", "", issues);
    auto b1 = detail::required_matrix(doc, "B1", "", issues);
    auto b2 = detail::required_matrix(doc, "B2", "", issues);
    auto c1 = detail::required_matrix(doc, "C1", "", issues);
    auto c2 = detail::required_matrix(doc, "C2", "", issues);
    if (c && a2 && b1 && b2 && c1 && c2 && levy) {
      detail::build_into(issues, [&] {
        out.canonical.emplace(*c, *a2, *b1, *b2, *c1, *c2, *levy);
      });
    }
  }
  issues.raise();
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::validation, "cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::validation, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ModelDocument load_document(const std::string& path) {
  return parse_document(read_json_file(path));
}

// --------------------------------------------------------------------- CSV

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  Matrix data;

  /// Index of a named column, or -1.
  Eigen::Index column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return Eigen::Index(i);
    }
    return -1;
  }
};

inline void write_csv(std::ostream& out, const CsvTable& t) {
  require(Eigen::Index(t.header.size()) == t.data.cols(), ErrorKind::dimension,
          "CSV header does not match column count");
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) out << ',';
    out << t.header[i];
  }
  out << '\n';
  std::string line;
  for (Eigen::Index r = 0; r < t.data.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < t.data.cols(); ++c) {
      if (c) line += ',';
      line += format_double(t.data(r, c));
    }
    line += '\n';
    out << line;
  }
}

inline void write_csv_file(const std::string& path, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorKind::validation, "cannot open '" + path + "' for writing");
  write_csv(out, t);
  require(bool(out), ErrorKind::validation, "failed writing '" + path + "'");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

/// Header row plus numeric rows.
inline CsvTable read_csv(std::istream& in, const std::string& name = "csv") {
  CsvTable t;
  std::string line;
  require(bool(std::getline(in, line)), ErrorKind::data, name + ": empty file");
  t.header = split_csv_line(line);
  const auto cols = Eigen::Index(t.header.size());
  std::vector<double> values;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto cells = split_csv_line(line);
    require(Eigen::Index(cells.size()) == cols, ErrorKind::data,
            name + ": row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " fields, header has " +
                std::to_string(cols));
    for (const auto& cell : cells) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      require(!cell.empty() && end == cell.c_str() + cell.size(), ErrorKind::data,
              name + ": row " + std::to_string(row) + ": '" + cell + "' is not a number");
      values.push_back(x);
    }
  }
  t.data.resize(row, cols);
  for (long r = 0; r < row; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      t.data(r, c) = values[std::size_t(r * cols + c)];
    }
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::validation, "cannot open '" + path + "' for reading");
  return read_csv(in, path);
}

/// Columns y_1..y_k of a path file; k must equal d.
inline Matrix observations_from_csv(const CsvTable& t, Eigen::Index d) {
  Eigen::Index k = 0;
  while (t.column("y_" + std::to_string(k + 1)) >= 0) ++k;
  require(k == d, ErrorKind::dimension,
          "path file has " + std::to_string(k) + " observation columns (y_1..), model has d = " +
              std::to_string(d));
  Matrix y(t.data.rows(), d);
  for (Eigen::Index i = 0; i < d; ++i) y.col(i) = t.data.col(t.column("y_" + std::to_string(i + 1)));
  return y;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorKind::validation, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  require(bool(out), ErrorKind::validation, "failed writing '" + path + "'");
}

}  // namespace cointss
