#include "lssid/io.hpp"

#include "lssid/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lssid::io {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Json& field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::InvalidArgument, ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

std::vector<Matrix> family_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, what + " must be an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

Json family_to_json(const std::vector<Matrix>& f) {
  Json j = Json::array();
  for (const Matrix& m : f) j.push_back(matrix_to_json(m));
  return j;
}

Json table_to_json(const WordTable& t, int num_modes) {
  Json j = Json::object();
  for (const auto& [w, m] : t) j[w.to_string(num_modes)] = matrix_to_json(m);
  return j;
}

WordTable table_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, int num_modes, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, what + " must be an object keyed by words");
  WordTable t(rows, cols);
  for (auto it = j.begin(); it != j.end(); ++it) {
    t.insert(Word::parse(it.key(), num_modes), matrix_from_json(it.value(), what + "['" + it.key() + "']"));
  }
  return t;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw Error(ErrorCode::InvalidArgument, where + ": cannot parse number '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::InvalidArgument, where + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                                                  std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, where));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorCode::InvalidArgument, path.string() + ": missing header row");
  return t;
}

int integral(double v, const std::string& where) {
  const double r = std::round(v);
  if (r != v) throw Error(ErrorCode::InvalidArgument, where + ": expected an integer, got " + format_double(v));
  return static_cast<int>(r);
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::InvalidArgument,
                path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

Json matrix_to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(std::move(row));
  }
  return j;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, what + " must be a nested array");
  if (j.empty()) return Matrix(0, 0);
  if (!j[0].is_array()) {
    Matrix m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw Error(ErrorCode::InvalidArgument, what + " has a non-numeric entry");
      m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    }
    return m;
  }
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw Error(ErrorCode::DimensionMismatch, what + ": rows have different lengths");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw Error(ErrorCode::InvalidArgument, what + " has a non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  const Matrix m = matrix_from_json(j, what);
  if (m.cols() != 1) throw Error(ErrorCode::DimensionMismatch, what + " must be a flat array");
  return m.col(0);
}

Json model_to_json(const SwitchedModel& m) {
  Json j;
  j["modes"] = m.num_modes();
  j["A"] = family_to_json(m.A);
  j["B"] = family_to_json(m.B);
  j["K"] = family_to_json(m.K);
  j["C"] = matrix_to_json(m.C);
  j["D"] = matrix_to_json(m.D);
  j["F"] = matrix_to_json(m.F);
  j["p"] = vector_to_json(m.p);
  j["Qu"] = matrix_to_json(m.Qu);
  j["Qv"] = family_to_json(m.Qv);
  return j;
}

SwitchedModel model_from_json(const Json& j) {
  const std::string ctx = "model";
  SwitchedModel m;
  m.A = family_from_json(field(j, "A", ctx), "A");
  m.B = family_from_json(field(j, "B", ctx), "B");
  m.K = family_from_json(field(j, "K", ctx), "K");
  m.C = matrix_from_json(field(j, "C", ctx), "C");
  m.D = matrix_from_json(field(j, "D", ctx), "D");
  m.F = j.contains("F") ? matrix_from_json(j.at("F"), "F") : Matrix::Identity(m.C.rows(), m.C.rows());
  m.p = vector_from_json(field(j, "p", ctx), "p");
  m.Qu = matrix_from_json(field(j, "Qu", ctx), "Qu");
  if (j.contains("modes") && j.at("modes").get<int>() != m.num_modes()) {
    throw Error(ErrorCode::InvalidModel, "model: 'modes' disagrees with the number of A matrices");
  }
  if (j.contains("Qv") == j.contains("Qv_conditional")) {
    throw Error(ErrorCode::InvalidArgument, "model: give exactly one of 'Qv' and 'Qv_conditional'");
  }
  if (j.contains("Qv")) {
    m.Qv = family_from_json(j.at("Qv"), "Qv");
  } else {
    const auto cond = family_from_json(j.at("Qv_conditional"), "Qv_conditional");
    if (static_cast<Eigen::Index>(cond.size()) != m.p.size()) {
      throw Error(ErrorCode::InvalidModel, "model: Qv_conditional needs one matrix per mode");
    }
    for (std::size_t s = 0; s < cond.size(); ++s) m.Qv.push_back(m.p(static_cast<Eigen::Index>(s)) * cond[s]);
  }
  return m;
}

Json selection_to_json(const Selection& sel, int num_modes) {
  Json j;
  j["n_y"] = sel.n_y;
  j["n_cols"] = sel.n_cols;
  j["alpha"] = Json::array();
  for (const auto& r : sel.alpha) j["alpha"].push_back({{"word", r.word.to_string(num_modes)}, {"row", r.row}});
  j["beta"] = Json::array();
  for (const auto& c : sel.beta) {
    j["beta"].push_back({{"mode", c.mode}, {"word", c.word.to_string(num_modes)}, {"col", c.col}});
  }
  return j;
}

Selection selection_from_json(const Json& j, int num_modes) {
  const std::string ctx = "selection";
  Selection sel;
  sel.n_y = field(j, "n_y", ctx).get<int>();
  sel.n_cols = field(j, "n_cols", ctx).get<int>();
  for (const auto& r : field(j, "alpha", ctx)) {
    sel.alpha.push_back({Word::parse(field(r, "word", ctx).get<std::string>(), num_modes), field(r, "row", ctx).get<int>()});
  }
  for (const auto& c : field(j, "beta", ctx)) {
    sel.beta.push_back({field(c, "mode", ctx).get<int>(),
                        Word::parse(field(c, "word", ctx).get<std::string>(), num_modes), field(c, "col", ctx).get<int>()});
  }
  sel.validate(num_modes);
  return sel;
}

Json covariance_table_to_json(const CovarianceTable& t) {
  Json j;
  j["modes"] = t.num_modes;
  j["n_y"] = t.n_y;
  j["n_u"] = t.n_u;
  j["samples"] = t.samples;
  j["p"] = vector_to_json(t.p);
  j["q_u"] = matrix_to_json(t.q_u);
  j["t_yy"] = family_to_json(t.t_yy);
  j["lambda_yu"] = table_to_json(t.lambda_yu, t.num_modes);
  j["lambda_yy"] = table_to_json(t.lambda_yy, t.num_modes);
  j["degenerate"] = Json::array();
  for (const Word& w : t.degenerate) j["degenerate"].push_back(w.to_string(t.num_modes));
  return j;
}

CovarianceTable covariance_table_from_json(const Json& j) {
  const std::string ctx = "covariance table";
  CovarianceTable t;
  t.num_modes = field(j, "modes", ctx).get<int>();
  t.n_y = field(j, "n_y", ctx).get<Eigen::Index>();
  t.n_u = field(j, "n_u", ctx).get<Eigen::Index>();
  t.samples = j.value("samples", std::size_t{0});
  t.p = vector_from_json(field(j, "p", ctx), "p");
  t.q_u = matrix_from_json(field(j, "q_u", ctx), "q_u");
  t.t_yy = family_from_json(field(j, "t_yy", ctx), "t_yy");
  t.lambda_yu = table_from_json(field(j, "lambda_yu", ctx), t.n_y, t.n_u, t.num_modes, "lambda_yu");
  t.lambda_yy = table_from_json(field(j, "lambda_yy", ctx), t.n_y, t.n_y, t.num_modes, "lambda_yy");
  if (j.contains("degenerate")) {
    for (const auto& w : j.at("degenerate")) t.degenerate.push_back(Word::parse(w.get<std::string>(), t.num_modes));
  }
  t.validate();
  return t;
}

Json diagnostics_to_json(const RealizationDiagnostics& d) {
  auto report = [](const FixedPointReport& r) {
    return Json{{"iterations", r.iterations}, {"last_delta", r.last_delta}, {"delta_tail", r.delta_tail}};
  };
  Json j;
  j["hankel_rank_psi"] = d.hankel_rank_psi;
  j["hankel_rank_markov"] = d.hankel_rank_markov;
  j["singular_values_psi"] = vector_to_json(d.singular_values_psi);
  j["singular_values_markov"] = vector_to_json(d.singular_values_markov);
  j["ydyd_iteration"] = report(d.ydyd);
  j["innovation_iteration"] = report(d.kq);
  j["schur_radius"] = d.schur_radius;
  return j;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string dataset_to_csv(const Dataset& d) {
  std::string out = "t,q";
  for (Eigen::Index i = 1; i <= d.n_u(); ++i) out += ",u_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= d.n_y(); ++i) out += ",y_" + std::to_string(i);
  out += '\n';
  for (Eigen::Index t = 0; t < d.length(); ++t) {
    out += std::to_string(d.t0 + t);
    out += ',';
    out += std::to_string(d.q[static_cast<std::size_t>(t)]);
    for (Eigen::Index i = 0; i < d.n_u(); ++i) (out += ',') += format_double(d.u(t, i));
    for (Eigen::Index i = 0; i < d.n_y(); ++i) (out += ',') += format_double(d.y(t, i));
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& d) { write_text_file(path, dataset_to_csv(d)); }

void write_series_csv(const std::filesystem::path& path, const Matrix& y, long t0) {
  std::string out = "t";
  for (Eigen::Index i = 1; i <= y.cols(); ++i) out += ",y_" + std::to_string(i);
  out += '\n';
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    out += std::to_string(t0 + t);
    for (Eigen::Index i = 0; i < y.cols(); ++i) (out += ',') += format_double(y(t, i));
    out += '\n';
  }
  write_text_file(path, out);
}

void write_noise_free_csv(const std::filesystem::path& path, const Dataset& d) {
  if (d.y_noise_free.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset has no noise-free channel");
  write_series_csv(path, d.y_noise_free, d.t0);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::string where = path.string();
  if (t.header.size() < 3 || t.header[0] != "t" || t.header[1] != "q") {
    throw Error(ErrorCode::InvalidArgument, where + ":1: header must start with t,q");
  }
  Eigen::Index nu = 0, ny = 0;
  for (std::size_t c = 2; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h == "u_" + std::to_string(nu + 1) && ny == 0) {
      ++nu;
    } else if (h == "y_" + std::to_string(ny + 1)) {
      ++ny;
    } else {
      throw Error(ErrorCode::InvalidArgument, where + ":1: unexpected column '" + h + "'");
    }
  }
  if (ny == 0) throw Error(ErrorCode::InvalidArgument, where + ":1: no output columns");
  Dataset d;
  const auto T = static_cast<Eigen::Index>(t.rows.size());
  d.y.resize(T, ny);
  d.u.resize(T, nu);
  d.q.resize(t.rows.size());
  for (Eigen::Index r = 0; r < T; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    const std::string at = where + ":" + std::to_string(r + 2);
    if (r == 0) d.t0 = integral(row[0], at);
    d.q[static_cast<std::size_t>(r)] = integral(row[1], at);
    for (Eigen::Index i = 0; i < nu; ++i) d.u(r, i) = row[static_cast<std::size_t>(2 + i)];
    for (Eigen::Index i = 0; i < ny; ++i) d.y(r, i) = row[static_cast<std::size_t>(2 + nu + i)];
  }
  return d;
}

void read_noise_free_csv(const std::filesystem::path& path, Dataset& d) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != static_cast<std::size_t>(d.n_y()) + 1 ||
      t.rows.size() != static_cast<std::size_t>(d.length())) {
    throw Error(ErrorCode::DimensionMismatch, path.string() + ": noise-free channel does not match the dataset");
  }
  d.y_noise_free.resize(d.length(), d.n_y());
  for (Eigen::Index r = 0; r < d.length(); ++r)
    for (Eigen::Index i = 0; i < d.n_y(); ++i) d.y_noise_free(r, i) = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(1 + i)];
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lssid::io
