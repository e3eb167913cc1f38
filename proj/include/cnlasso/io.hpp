#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnlasso/common.hpp"
#include "cnlasso/compositional.hpp"
#include "cnlasso/similarity_graph.hpp"
#include "cnlasso/solver.hpp"

namespace cnlasso {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int find_column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// 6 significant digits, the precision used in every CSV we emit.
std::string format_number(double v);

double parse_number(const std::string& text, const std::string& context);

// Column roles for loading a sample table.
struct DatasetSpec {
  std::string response;                  // required response column
  std::vector<std::string> covariates;   // columns excluded from the composition
  std::vector<std::string> categorical;  // force-categorical overrides
  std::string input_kind = "auto";       // auto | counts | proportions
  std::optional<double> zero_replacement;
  bool reclose = false;  // re-close proportion rows that drift from sum 1
};

CompositionalDataset load_dataset_csv(const std::string& path, const DatasetSpec& spec);

// Graph files: dense n x n CSV (no header) or triplet CSV with header i,j,weight
// (0-based, mirrored on load). n_hint overrides the inferred size for triplets.
SimilarityGraph read_graph(const std::string& path, const std::string& format,
                           int n_hint = -1);
void write_graph(const std::string& path, const SimilarityGraph& graph,
                 const std::string& format);

Matrix read_matrix_csv(const std::string& path);  // headerless rectangular matrix
void write_matrix_csv(const std::string& path, const Matrix& m);

nlohmann::json fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace cnlasso
