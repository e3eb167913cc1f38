#include "cnlasso/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <tuple>

#include "cnlasso/error.hpp"

namespace cnlasso {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

bool parse_number_strict(const std::string& text, double* out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

}  // namespace

int CsvTable::find_column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<int>(c);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file (header row required)");
  for (auto& field : split_csv_line(line)) table.header.push_back(trim(field));
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw ParseError(path + ": row " + std::to_string(table.rows.size() + 2) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(table.header.size()));
    }
    for (auto& f : fields) f = trim(f);
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      const bool needs_quotes = row[c].find_first_of(",\"\n") != std::string::npos;
      if (needs_quotes) {
        out << '"';
        for (char ch : row[c]) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      } else {
        out << row[c];
      }
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  if (!out) throw IoError("write failed: " + path);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  if (!parse_number_strict(text, &v)) {
    throw ParseError(context + ": not a number: '" + text + "'");
  }
  return v;
}

CompositionalDataset load_dataset_csv(const std::string& path, const DatasetSpec& spec) {
  const CsvTable table = read_csv(path);
  if (spec.response.empty()) throw ValidationError("response column not specified");
  const int response_col = table.find_column(spec.response);
  if (response_col < 0) throw ParseError(path + ": response column '" + spec.response + "' missing");
  const int id_col = table.find_column("id");

  auto is_covariate = [&](const std::string& name) {
    return std::find(spec.covariates.begin(), spec.covariates.end(), name) !=
           spec.covariates.end();
  };
  for (const auto& name : spec.covariates) {
    if (table.find_column(name) < 0) {
      throw ParseError(path + ": covariate column '" + name + "' missing");
    }
  }

  std::vector<int> feature_cols;
  std::vector<int> covariate_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == response_col || static_cast<int>(c) == id_col) continue;
    if (is_covariate(table.header[c])) {
      covariate_cols.push_back(static_cast<int>(c));
    } else {
      feature_cols.push_back(static_cast<int>(c));
    }
  }
  const int n = static_cast<int>(table.rows.size());
  const int p = static_cast<int>(feature_cols.size());
  if (n < 1) throw ValidationError(path + ": no samples");
  if (p < 2) throw ValidationError(path + ": need at least two composition columns");

  Vector responses(n);
  RowMatrix raw(n, p);
  std::vector<std::string> sample_ids;
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    responses[i] = parse_number(row[static_cast<std::size_t>(response_col)],
                                path + " row " + std::to_string(i + 2));
    for (int j = 0; j < p; ++j) {
      raw(i, j) = parse_number(row[static_cast<std::size_t>(feature_cols[static_cast<std::size_t>(j)])],
                               path + " row " + std::to_string(i + 2));
    }
    sample_ids.push_back(id_col >= 0 ? row[static_cast<std::size_t>(id_col)]
                                     : std::to_string(i + 1));
  }

  // counts vs proportions
  std::string kind = spec.input_kind;
  if (kind == "auto") {
    bool proportion_like = true;
    for (int i = 0; i < n && proportion_like; ++i) {
      if (std::abs(raw.row(i).sum() - 1.0) > 1e-6) proportion_like = false;
      for (int j = 0; j < p; ++j) {
        if (!(raw(i, j) > 0.0)) {
          proportion_like = false;
          break;
        }
      }
    }
    kind = proportion_like ? "proportions" : "counts";
  }
  RowMatrix x(n, p);
  if (kind == "counts") {
    for (int i = 0; i < n; ++i) {
      x.row(i) = close(raw.row(i).transpose(), spec.zero_replacement).values().transpose();
    }
  } else if (kind == "proportions") {
    for (int i = 0; i < n; ++i) {
      Vector row = raw.row(i).transpose();
      if (!validate_simplex(row)) {
        if (!spec.reclose) {
          throw ValidationError(path + " row " + std::to_string(i + 2) +
                                ": not a valid composition (pass --reclose to re-close, or load "
                                "as counts)");
        }
        row = close(row, spec.zero_replacement).values();
      }
      x.row(i) = row.transpose();
    }
  } else {
    throw ValidationError("unknown input kind: " + kind);
  }

  // covariates: categorical iff any value fails to parse as a number, or forced
  std::vector<CovariateColumn> cov_columns;
  for (int c : covariate_cols) {
    CovariateColumn col;
    col.name = table.header[static_cast<std::size_t>(c)];
    const bool forced = std::find(spec.categorical.begin(), spec.categorical.end(), col.name) !=
                        spec.categorical.end();
    bool numeric = !forced;
    std::vector<double> values;
    for (int i = 0; i < n && numeric; ++i) {
      double v = 0.0;
      if (parse_number_strict(table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)],
                              &v)) {
        values.push_back(v);
      } else {
        numeric = false;
      }
    }
    col.categorical = !numeric;
    if (numeric) {
      col.numeric = std::move(values);
    } else {
      for (int i = 0; i < n; ++i) {
        col.labels.push_back(table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
      }
    }
    cov_columns.push_back(std::move(col));
  }

  std::vector<std::string> feature_names;
  for (int c : feature_cols) feature_names.push_back(table.header[static_cast<std::size_t>(c)]);

  return CompositionalDataset(std::move(x), std::move(responses),
                              CovariateTable(std::move(cov_columns)), std::move(feature_names),
                              std::move(sample_ids));
}

namespace {

SimilarityGraph canonical_graph(Matrix r, const std::string& what) {
  if (r.rows() != r.cols()) throw ValidationError(what + ": not square");
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) > 1e-9) throw ValidationError(what + ": nonzero diagonal");
    r(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(r(i, j) - r(j, i)) > 1e-9) throw ValidationError(what + ": not symmetric");
      if (r(i, j) < 0.0 || r(j, i) < 0.0) throw ValidationError(what + ": negative weight");
      const double v = 0.5 * (r(i, j) + r(j, i));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return SimilarityGraph(std::move(r));
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& field : split_csv_line(line)) {
      row.push_back(parse_number(field, path + " line " + std::to_string(rows.size() + 1)));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

SimilarityGraph read_graph(const std::string& path, const std::string& format, int n_hint) {
  if (format == "dense") {
    return canonical_graph(read_matrix_csv(path), path);
  }
  if (format != "triplet") throw ValidationError("unknown graph format: " + format);

  const CsvTable table = read_csv(path);
  const int ci = table.find_column("i");
  const int cj = table.find_column("j");
  const int cw = table.find_column("weight");
  if (ci < 0 || cj < 0 || cw < 0) {
    throw ParseError(path + ": triplet graph needs header i,j,weight");
  }
  int n = n_hint;
  std::vector<std::tuple<int, int, double>> entries;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + " row " + std::to_string(r + 2);
    const double di = parse_number(row[static_cast<std::size_t>(ci)], where);
    const double dj = parse_number(row[static_cast<std::size_t>(cj)], where);
    const double w = parse_number(row[static_cast<std::size_t>(cw)], where);
    const int i = static_cast<int>(di);
    const int j = static_cast<int>(dj);
    if (di != i || dj != j || i < 0 || j < 0) throw ParseError(where + ": bad indices");
    if (i == j && w != 0.0) throw ValidationError(where + ": nonzero diagonal");
    entries.emplace_back(i, j, w);
    n = std::max({n, i + 1, j + 1});
  }
  if (n < 1) throw ValidationError(path + ": cannot infer graph size");
  Matrix r = Matrix::Zero(n, n);
  for (const auto& [i, j, w] : entries) {
    if (i >= n || j >= n) throw ValidationError(path + ": index exceeds graph size");
    r(i, j) = w;
    r(j, i) = w;
  }
  return canonical_graph(std::move(r), path);
}

void write_graph(const std::string& path, const SimilarityGraph& graph,
                 const std::string& format) {
  if (format == "dense") {
    write_matrix_csv(path, graph.weights());
    return;
  }
  if (format != "triplet") throw ValidationError("unknown graph format: " + format);
  CsvTable table;
  table.header = {"i", "j", "weight"};
  for (int i = 0; i < graph.size(); ++i) {
    for (int j = 0; j < i; ++j) {
      if (graph(i, j) != 0.0) {
        table.rows.push_back(
            {std::to_string(i), std::to_string(j), format_number(graph(i, j))});
      }
    }
  }
  write_csv(path, table);
}

namespace {

nlohmann::json matrix_to_json(const RowMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RowMatrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a non-empty array");
  const std::size_t cols = j.front().size();
  RowMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ParseError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json fit_result_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["w"] = matrix_to_json(fit.w);
  j["b"] = matrix_to_json(fit.b);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : fit.trace) {
    trace.push_back({{"primal_residual", s.primal_residual},
                     {"dual_residual", s.dual_residual},
                     {"objective", s.objective}});
  }
  j["trace"] = std::move(trace);
  if (fit.cluster_labels) j["clusters"] = *fit.cluster_labels;
  return j;
}

FitResult fit_result_from_json(const nlohmann::json& j) {
  FitResult fit;
  fit.w = matrix_from_json(j.at("w"), "fit json: w");
  fit.b = matrix_from_json(j.at("b"), "fit json: b");
  fit.iterations = j.at("iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  if (j.contains("trace")) {
    for (const auto& s : j.at("trace")) {
      fit.trace.push_back({s.at("primal_residual").get<double>(),
                           s.at("dual_residual").get<double>(),
                           s.at("objective").get<double>()});
    }
  }
  if (j.contains("clusters") && !j.at("clusters").is_null()) {
    fit.cluster_labels = j.at("clusters").get<std::vector<int>>();
  }
  return fit;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace cnlasso
