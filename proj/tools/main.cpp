#include <algorithm>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnlasso/compositional.hpp"
#include "cnlasso/constrained_lasso.hpp"
#include "cnlasso/error.hpp"
#include "cnlasso/io.hpp"
#include "cnlasso/model_selection.hpp"
#include "cnlasso/similarity_graph.hpp"
#include "cnlasso/simulation.hpp"
#include "cnlasso/solver.hpp"
#include "cnlasso/weber.hpp"

namespace {

using namespace cnlasso;

// Accepts the default TOML/INI config syntax and, when the file starts with
// '{', a flat JSON object with the long option names as keys.
class JsonOrIniConfig : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::streampos start = input.tellg();
    input >> std::ws;
    const int first = input.peek();
    input.seekg(start);
    if (first != '{') return CLI::ConfigBase::from_config(input);

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::FileError(std::string("config JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> out;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_to_string(v));
      } else {
        item.inputs.push_back(scalar_to_string(value));
      }
      out.push_back(std::move(item));
    }
    return out;
  }

 private:
  static std::string scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

void configure_subcommand(CLI::App* cmd) {
  cmd->set_config("--config", "", "Flag defaults from a TOML/INI or JSON file");
  cmd->config_formatter(std::make_shared<JsonOrIniConfig>());
  cmd->allow_config_extras(false);
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    values.push_back(parse_number(item, flag));
  }
  if (values.empty()) throw ParseError(flag + ": empty list");
  return values;
}

// ---- shared option bundles -------------------------------------------------

struct DataArgs {
  std::string path;
  std::string response;
  std::vector<std::string> covariates;
  std::vector<std::string> categorical;
  std::string input_kind = "auto";
  double zero_replacement = -1.0;  // <= 0 means unset
  bool reclose = false;
  bool center_response = false;
};

void add_data_options(CLI::App* cmd, DataArgs& args, bool response_required = true) {
  cmd->add_option("--data", args.path, "Sample CSV (header row; optional id column)")
      ->required();
  auto* resp = cmd->add_option("--response", args.response, "Response column name");
  if (response_required) resp->required();
  cmd->add_option("--covariates", args.covariates,
                  "Covariate column names (excluded from the composition)")
      ->delimiter(',');
  cmd->add_option("--categorical", args.categorical,
                  "Covariate columns to force categorical")
      ->delimiter(',');
  cmd->add_option("--input-kind", args.input_kind, "auto|counts|proportions")
      ->check(CLI::IsMember({"auto", "counts", "proportions"}));
  cmd->add_option("--zero-replacement", args.zero_replacement,
                  "Value substituted for zero counts before closure");
  cmd->add_flag("--reclose", args.reclose, "Re-close proportion rows that drift from sum 1");
  cmd->add_flag("--center-response", args.center_response,
                "Subtract the mean response of this dataset before fitting");
}

struct LoadedData {
  CompositionalDataset data;
  RowMatrix z;
  Vector y;
  double response_offset = 0.0;
};

DatasetSpec dataset_spec(const DataArgs& args) {
  DatasetSpec spec;
  spec.response = args.response;
  spec.covariates = args.covariates;
  spec.categorical = args.categorical;
  spec.input_kind = args.input_kind;
  if (args.zero_replacement > 0.0) spec.zero_replacement = args.zero_replacement;
  spec.reclose = args.reclose;
  return spec;
}

LoadedData load_data(const DataArgs& args) {
  CompositionalDataset data = load_dataset_csv(args.path, dataset_spec(args));
  LoadedData out{std::move(data), {}, {}, 0.0};
  out.z = log_rows(out.data.compositions());
  out.y = out.data.responses();
  if (args.center_response) {
    out.response_offset = out.y.mean();
    out.y.array() -= out.response_offset;
  }
  return out;
}

struct GraphArgs {
  std::string path;
  std::string format = "dense";
  std::string distance;
  int k = 5;
};

void add_graph_options(CLI::App* cmd, GraphArgs& args) {
  cmd->add_option("--graph", args.path, "Graph file (see --graph-format)");
  cmd->add_option("--graph-format", args.format, "dense|triplet")
      ->check(CLI::IsMember({"dense", "triplet"}));
  cmd->add_option("--distance", args.distance,
                  "Build the graph instead: gower|logratio k-NN over the samples")
      ->check(CLI::IsMember({"gower", "logratio"}));
  cmd->add_option("--k-neighbors", args.k, "Neighbor count for --distance graphs")
      ->check(CLI::PositiveNumber);
}

SimilarityGraph build_knn_graph(const CompositionalDataset& data, const std::string& distance,
                                int k) {
  if (distance == "gower") {
    if (!data.has_covariates()) {
      throw ValidationError("gower graph needs --covariates columns");
    }
    return knn_graph(gower_distance(data.covariates()), k);
  }
  return knn_graph(aitchison_distance(data), k);
}

SimilarityGraph obtain_graph(const GraphArgs& args, const CompositionalDataset& data,
                             double lambda1) {
  if (!args.path.empty()) {
    SimilarityGraph graph = read_graph(args.path, args.format, data.n());
    if (graph.size() != data.n()) {
      throw ValidationError("graph has " + std::to_string(graph.size()) + " nodes but data has " +
                            std::to_string(data.n()) + " samples");
    }
    return graph;
  }
  if (!args.distance.empty()) return build_knn_graph(data, args.distance, args.k);
  if (lambda1 == 0.0) {
    return SimilarityGraph(Matrix::Zero(data.n(), data.n()));  // fusion off: empty graph
  }
  throw ValidationError("need --graph or --distance when lambda1 > 0");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t chosen =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cout << "seed: " << chosen << "\n";
  return chosen;
}

nlohmann::json cv_report_to_json(const CvReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    cells.push_back({{"lambda1", cell.lambda1},
                     {"lambda2", cell.lambda2},
                     {"mean_mse", cell.mean_mse},
                     {"sd_mse", cell.sd_mse},
                     {"fallback_count", cell.fallback_count}});
  }
  nlohmann::json j;
  j["cells"] = std::move(cells);
  const auto& best = report.best();
  j["best"] = {{"lambda1", best.lambda1},
               {"lambda2", best.lambda2},
               {"mean_mse", best.mean_mse},
               {"sd_mse", best.sd_mse}};
  j["fold_of"] = report.fold_of;
  j["predictions"] = std::vector<double>(report.predictions.begin(), report.predictions.end());
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["mode"] = to_string(report.mode);
  return j;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  DataArgs data;
  GraphArgs graph;
  std::string mode = "proposed";
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_cl = -1.0;
  double rho = 1.0, phi = 1.0, psi = 1.0;
  int max_iters = 2000;
  double tol = 1e-5;
  double cluster_tau = 1e-2;
  std::string out;
  std::string emit_log_features;
};

int run_fit(const FitArgs& args) {
  const LoadedData loaded = load_data(args.data);
  const FitMode mode = fit_mode_from_string(args.mode);
  if (args.lambda_cl >= 0.0 && mode != FitMode::kCl) {
    throw ValidationError("--lambda applies to --mode cl only");
  }

  nlohmann::json j;
  if (mode == FitMode::kCl) {
    ClConfig cfg;
    cfg.phi = args.phi;
    cfg.psi = args.psi;
    cfg.max_iters = args.max_iters;
    cfg.tol_primal = args.tol;
    cfg.tol_dual = args.tol;
    const double lambda = args.lambda_cl >= 0.0 ? args.lambda_cl : args.lambda2;
    const ClFit fit = fit_cl(loaded.z, loaded.y, lambda, cfg);
    FitResult as_result;
    as_result.w = RowMatrix(1, fit.beta.size());
    as_result.w.row(0) = fit.beta.transpose();
    as_result.b = RowMatrix(1, fit.beta_sparse.size());
    as_result.b.row(0) = fit.beta_sparse.transpose();
    as_result.iterations = fit.iterations;
    as_result.converged = fit.converged;
    as_result.trace = fit.trace;
    j = fit_result_to_json(as_result);
    j["shared"] = true;
    j["lambda"] = lambda;
    std::cout << "fit: converged=" << (fit.converged ? "true" : "false")
              << " iterations=" << fit.iterations << "\n";
  } else {
    const SimilarityGraph graph = obtain_graph(args.graph, loaded.data, args.lambda1);
    SolverConfig cfg;
    cfg.lambda1 = args.lambda1;
    cfg.lambda2 = args.lambda2;
    cfg.rho = args.rho;
    cfg.phi = args.phi;
    cfg.psi = args.psi;
    cfg.max_iters = args.max_iters;
    cfg.tol_primal = args.tol;
    cfg.tol_dual = args.tol;
    cfg.zero_sum = mode == FitMode::kProposed;
    FitResult fit = fit_network_lasso(loaded.z, loaded.y, graph, cfg);
    fit.cluster_labels = extract_clusters(fit.w, args.cluster_tau);
    j = fit_result_to_json(fit);
    j["shared"] = false;
    j["lambda1"] = args.lambda1;
    j["lambda2"] = args.lambda2;
    std::cout << "fit: converged=" << (fit.converged ? "true" : "false")
              << " iterations=" << fit.iterations << "\n";
  }
  j["mode"] = args.mode;
  j["feature_names"] = loaded.data.feature_names();
  j["sample_ids"] = loaded.data.sample_ids();
  if (args.data.center_response) j["response_offset"] = loaded.response_offset;
  write_json_file(args.out, j);

  if (!args.emit_log_features.empty()) {
    CsvTable table;
    table.header = loaded.data.feature_names();
    for (Eigen::Index i = 0; i < loaded.z.rows(); ++i) {
      std::vector<std::string> row;
      for (Eigen::Index c = 0; c < loaded.z.cols(); ++c) {
        row.push_back(format_number(loaded.z(i, c)));
      }
      table.rows.push_back(std::move(row));
    }
    write_csv(args.emit_log_features, table);
  }
  return 0;
}

// ---- graph -----------------------------------------------------------------

struct GraphCmdArgs {
  DataArgs data;
  std::string distance = "logratio";
  int k = 5;
  std::string out;
  std::string format = "dense";
};

int run_graph(const GraphCmdArgs& args) {
  const LoadedData loaded = load_data(args.data);
  const SimilarityGraph graph = build_knn_graph(loaded.data, args.distance, args.k);
  write_graph(args.out, graph, args.format);
  return 0;
}

// ---- cv --------------------------------------------------------------------

struct CvArgs {
  DataArgs data;
  GraphArgs graph;
  std::string mode = "proposed";
  int k = 5;
  bool use_loocv = false;
  std::string grid_l1;
  std::string grid_l2;
  std::optional<std::uint64_t> seed;
  double rho = 1.0, phi = 1.0, psi = 1.0;
  int max_iters = 2000;
  double tol = 1e-5;
  int threads = 1;
  std::string out;
  std::string emit_scatter;
};

int run_cv(const CvArgs& args) {
  const LoadedData loaded = load_data(args.data);
  const FitMode mode = fit_mode_from_string(args.mode);
  const SimilarityGraph graph =
      mode == FitMode::kCl && args.graph.path.empty() && args.graph.distance.empty()
          ? SimilarityGraph(Matrix::Zero(loaded.data.n(), loaded.data.n()))
          : obtain_graph(args.graph, loaded.data, 1.0);

  CvGrid grid = CvGrid::defaults();
  if (!args.grid_l1.empty()) grid.lambda1 = parse_double_list(args.grid_l1, "--grid-l1");
  if (!args.grid_l2.empty()) grid.lambda2 = parse_double_list(args.grid_l2, "--grid-l2");

  SolverConfig solver_cfg;
  solver_cfg.rho = args.rho;
  solver_cfg.phi = args.phi;
  solver_cfg.psi = args.psi;
  solver_cfg.max_iters = args.max_iters;
  solver_cfg.tol_primal = args.tol;
  solver_cfg.tol_dual = args.tol;

  CvReport report;
  if (args.use_loocv) {
    report = loocv(loaded.z, loaded.y, graph, grid, mode, solver_cfg, {}, args.threads);
  } else {
    const std::uint64_t seed = resolve_seed(args.seed);
    report = kfold_cv(loaded.z, loaded.y, graph, grid, args.k, mode, seed, solver_cfg, {},
                      args.threads);
  }

  nlohmann::json j = cv_report_to_json(report);
  try {
    j["r_squared"] = r_squared(loaded.y, report.predictions);
  } catch (const ValidationError&) {
    // zero-variance response: leave r_squared out
  }
  if (args.data.center_response) j["response_offset"] = loaded.response_offset;
  write_json_file(args.out, j);

  if (!args.emit_scatter.empty()) {
    CsvTable scatter;
    scatter.header = {"observed", "predicted"};
    for (Eigen::Index i = 0; i < loaded.y.size(); ++i) {
      scatter.rows.push_back({format_number(loaded.y[i]), format_number(report.predictions[i])});
    }
    write_csv(args.emit_scatter, scatter);
  }
  const auto& best = report.best();
  std::cout << "cv: best lambda1=" << format_number(best.lambda1)
            << " lambda2=" << format_number(best.lambda2)
            << " mean_mse=" << format_number(best.mean_mse) << "\n";
  return 0;
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model;
  DataArgs data;  // new samples; response optional
  std::string train_data;
  std::string neighbors;
  std::string distance;
  int k = 5;
  double mu = 1.0, eta = 1.0;
  int max_iters = 5000;
  double tol = 1e-6;
  std::string out;
  std::string emit_coefficients;
};

int run_predict(const PredictArgs& args) {
  const nlohmann::json model = read_json_file(args.model);
  const FitResult fit = fit_result_from_json(model);
  const bool shared = model.value("shared", false);
  const std::string mode = model.value("mode", std::string("proposed"));
  const double offset = model.value("response_offset", 0.0);

  const CompositionalDataset new_data = load_dataset_csv(args.data.path, dataset_spec(args.data));
  const RowMatrix z_new = log_rows(new_data.compositions());
  if (z_new.cols() != fit.w.cols()) {
    throw ValidationError("model has p=" + std::to_string(fit.w.cols()) + " but data has p=" +
                          std::to_string(z_new.cols()));
  }
  const int n_new = new_data.n();

  RowMatrix coefficients(n_new, fit.w.cols());
  if (shared) {
    for (int i = 0; i < n_new; ++i) coefficients.row(i) = fit.w.row(0);
  } else {
    Matrix weights;
    if (!args.neighbors.empty()) {
      weights = read_matrix_csv(args.neighbors);
      if (weights.rows() != n_new || weights.cols() != fit.w.rows()) {
        throw ValidationError("--neighbors must be (new samples) x (train samples)");
      }
    } else {
      if (args.train_data.empty() || args.distance.empty()) {
        throw ValidationError("predict needs --neighbors, or --train-data with --distance");
      }
      const CompositionalDataset train =
          load_dataset_csv(args.train_data, dataset_spec(args.data));
      if (train.n() != fit.w.rows()) {
        throw ValidationError("--train-data rows do not match the fitted coefficients");
      }
      Matrix cross;
      if (args.distance == "gower") {
        if (!train.has_covariates() || !new_data.has_covariates()) {
          throw ValidationError("gower distance needs --covariates in both tables");
        }
        const GowerModel gower = GowerModel::fit(train.covariates());
        cross = gower.cross_distances(new_data.covariates(), train.covariates());
      } else {
        cross = aitchison_cross(new_data.compositions(), train.compositions());
      }
      weights = knn_rows(cross, args.k);
    }

    WeberConfig wcfg;
    wcfg.mu = args.mu;
    wcfg.eta = args.eta;
    wcfg.max_iters = args.max_iters;
    wcfg.tol = args.tol;
    wcfg.zero_sum = mode != "snl";
    for (int i = 0; i < n_new; ++i) {
      bool fallback = false;
      coefficients.row(i) =
          held_out_coefficients(fit.w, weights.row(i).transpose(), wcfg, &fallback).transpose();
      if (fallback) {
        std::cerr << "warning: sample " << new_data.sample_ids()[static_cast<std::size_t>(i)]
                  << " has no train neighbors; using the anchor mean\n";
      }
    }
  }

  CsvTable out;
  out.header = {"id", "predicted_response"};
  for (int i = 0; i < n_new; ++i) {
    const double pred =
        predict_response(coefficients.row(i).transpose(), z_new.row(i).transpose()) + offset;
    out.rows.push_back({new_data.sample_ids()[static_cast<std::size_t>(i)], format_number(pred)});
  }
  write_csv(args.out, out);

  if (!args.emit_coefficients.empty()) {
    CsvTable coef;
    coef.header = {"id"};
    for (const auto& name : new_data.feature_names()) coef.header.push_back(name);
    for (int i = 0; i < n_new; ++i) {
      std::vector<std::string> row{new_data.sample_ids()[static_cast<std::size_t>(i)]};
      for (Eigen::Index c = 0; c < coefficients.cols(); ++c) {
        row.push_back(format_number(coefficients(i, c)));
      }
      coef.rows.push_back(std::move(row));
    }
    write_csv(args.emit_coefficients, coef);
  }
  return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string model;
  double threshold = 0.05;
  int n_clusters = 0;
  std::string out;
  std::string emit_table;
};

int run_report(const ReportArgs& args) {
  const nlohmann::json model = read_json_file(args.model);
  const FitResult fit = fit_result_from_json(model);
  const RowMatrix& coef = fit.b;  // the reported sparse coefficients
  const int n = static_cast<int>(coef.rows());
  const int p = static_cast<int>(coef.cols());

  std::vector<std::string> feature_names;
  if (model.contains("feature_names") && !model.at("feature_names").empty()) {
    feature_names = model.at("feature_names").get<std::vector<std::string>>();
  } else {
    for (int c = 0; c < p; ++c) feature_names.push_back("x" + std::to_string(c + 1));
  }
  std::vector<std::string> sample_ids;
  if (model.contains("sample_ids") && !model.at("sample_ids").empty()) {
    sample_ids = model.at("sample_ids").get<std::vector<std::string>>();
  } else {
    for (int i = 0; i < n; ++i) sample_ids.push_back(std::to_string(i + 1));
  }

  // display copy: entries below the threshold are shown as exactly zero
  RowMatrix display = coef;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < p; ++c) {
      if (std::abs(display(i, c)) < args.threshold) display(i, c) = 0.0;
    }
  }
  std::vector<int> selected;
  for (int c = 0; c < p; ++c) {
    if (display.col(c).cwiseAbs().maxCoeff() > 0.0) selected.push_back(c);
  }

  std::vector<int> labels;
  if (args.n_clusters > 0) {
    labels = agglomerative_clusters(coef, args.n_clusters);
  } else if (fit.cluster_labels) {
    labels = *fit.cluster_labels;
  } else {
    labels.assign(static_cast<std::size_t>(n), 0);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
  });

  nlohmann::json j;
  j["threshold"] = args.threshold;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < p; ++c) row.push_back(display(i, c));
    rows.push_back(std::move(row));
  }
  j["coefficients"] = std::move(rows);
  nlohmann::json vars = nlohmann::json::array();
  for (int c : selected) {
    vars.push_back({{"index", c}, {"name", feature_names[static_cast<std::size_t>(c)]}});
  }
  j["selected_variables"] = std::move(vars);
  j["cluster_labels"] = labels;
  j["sample_order"] = order;
  write_json_file(args.out, j);

  if (!args.emit_table.empty()) {
    CsvTable table;
    table.header = {"id", "cluster"};
    for (int c : selected) table.header.push_back(feature_names[static_cast<std::size_t>(c)]);
    for (int pos = 0; pos < n; ++pos) {
      const int i = order[static_cast<std::size_t>(pos)];
      std::vector<std::string> row{sample_ids[static_cast<std::size_t>(i)],
                                   std::to_string(labels[static_cast<std::size_t>(i)])};
      for (int c : selected) row.push_back(format_number(display(i, c)));
      table.rows.push_back(std::move(row));
    }
    write_csv(args.emit_table, table);
  }
  std::cout << "report: " << selected.size() << " of " << p
            << " variables above threshold\n";
  return 0;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  int p = 30;
  double p_keep = 0.99;
  int replicates = 10;
  int n_per_cluster = 40;
  int n_train = 100;
  int n_valid = 20;
  double noise_sd = 0.1;
  std::vector<std::string> methods{"proposed", "snl", "cl"};
  std::optional<std::uint64_t> seed;
  std::string grid_l1;
  std::string grid_l2;
  int folds = 5;
  int threads = 1;
  int max_iters = 2000;
  double tol = 1e-5;
  std::string out;
};

int run_simulate(const SimulateArgs& args) {
  SimSpec spec;
  spec.p = args.p;
  spec.p_keep = args.p_keep;
  spec.replicates = args.replicates;
  spec.n_per_cluster = args.n_per_cluster;
  spec.n_train = args.n_train;
  spec.n_valid = args.n_valid;
  spec.noise_sd = args.noise_sd;
  spec.seed = resolve_seed(args.seed);

  CvGrid grid = CvGrid::defaults();
  if (!args.grid_l1.empty()) grid.lambda1 = parse_double_list(args.grid_l1, "--grid-l1");
  if (!args.grid_l2.empty()) grid.lambda2 = parse_double_list(args.grid_l2, "--grid-l2");

  std::vector<FitMode> methods;
  for (const auto& name : args.methods) methods.push_back(fit_mode_from_string(name));

  BenchmarkOptions opts;
  opts.cv_folds = args.folds;
  opts.threads = args.threads;
  opts.solver.max_iters = args.max_iters;
  opts.solver.tol_primal = args.tol;
  opts.solver.tol_dual = args.tol;

  const BenchmarkResult result = run_benchmark(spec, grid, methods, opts);

  CsvTable table;
  table.header = {"method", "p", "p_keep", "mse_mean", "mse_sd", "replicates"};
  for (const auto& row : result.rows) {
    table.rows.push_back({to_string(row.method), std::to_string(row.p),
                          format_number(row.p_keep), format_number(row.mse_mean),
                          format_number(row.mse_sd), std::to_string(row.replicates)});
    for (const auto& err : row.errors) {
      std::cerr << "warning: " << to_string(row.method) << " " << err << "\n";
    }
  }
  write_csv(args.out, table);
  return 0;
}

void emit_error_json(const std::string& stage, const std::string& message,
                     const nlohmann::json& extra = {}) {
  nlohmann::json j;
  j["stage"] = stage;
  j["message"] = message;
  if (!extra.empty()) j.update(extra);
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-sample log-contrast regression with network fusion"};
  app.require_subcommand(1);

  auto fit_args = std::make_shared<FitArgs>();
  auto* fit_cmd = app.add_subcommand("fit", "Fit coefficients on one dataset");
  configure_subcommand(fit_cmd);
  add_data_options(fit_cmd, fit_args->data);
  add_graph_options(fit_cmd, fit_args->graph);
  fit_cmd->add_option("--mode", fit_args->mode, "proposed|snl|cl")
      ->check(CLI::IsMember({"proposed", "snl", "cl"}));
  fit_cmd->add_option("--lambda1", fit_args->lambda1, "Network fusion penalty");
  fit_cmd->add_option("--lambda2", fit_args->lambda2, "l1 penalty");
  fit_cmd->add_option("--lambda", fit_args->lambda_cl, "Penalty for --mode cl");
  fit_cmd->add_option("--rho", fit_args->rho, "ADMM step (pair copies)");
  fit_cmd->add_option("--phi", fit_args->phi, "ADMM step (sparse copy)");
  fit_cmd->add_option("--psi", fit_args->psi, "ADMM step (zero-sum constraint)");
  fit_cmd->add_option("--max-iters", fit_args->max_iters, "Iteration cap");
  fit_cmd->add_option("--tol", fit_args->tol, "Primal and dual stopping tolerance");
  fit_cmd->add_option("--cluster-tau", fit_args->cluster_tau,
                      "Row-fusion threshold for reported clusters");
  fit_cmd->add_option("--out", fit_args->out, "Output fit JSON")->required();
  fit_cmd->add_option("--emit-log-features", fit_args->emit_log_features,
                      "Also write the log-feature matrix CSV");
  fit_cmd->callback([fit_args] { run_fit(*fit_args); });

  auto graph_args = std::make_shared<GraphCmdArgs>();
  auto* graph_cmd = app.add_subcommand("graph", "Build a sample-similarity graph");
  configure_subcommand(graph_cmd);
  add_data_options(graph_cmd, graph_args->data);
  graph_cmd->add_option("--distance", graph_args->distance, "gower|logratio")
      ->check(CLI::IsMember({"gower", "logratio"}));
  graph_cmd->add_option("--k", graph_args->k, "Neighbor count")->check(CLI::PositiveNumber);
  graph_cmd->add_option("--out", graph_args->out, "Output graph CSV")->required();
  graph_cmd->add_option("--format", graph_args->format, "dense|triplet")
      ->check(CLI::IsMember({"dense", "triplet"}));
  graph_cmd->callback([graph_args] { run_graph(*graph_args); });

  auto cv_args = std::make_shared<CvArgs>();
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validated grid search");
  configure_subcommand(cv_cmd);
  add_data_options(cv_cmd, cv_args->data);
  add_graph_options(cv_cmd, cv_args->graph);
  cv_cmd->add_option("--mode", cv_args->mode, "proposed|snl|cl")
      ->check(CLI::IsMember({"proposed", "snl", "cl"}));
  cv_cmd->add_option("--k", cv_args->k, "Fold count")->check(CLI::PositiveNumber);
  cv_cmd->add_flag("--loocv", cv_args->use_loocv, "Leave-one-out instead of k folds");
  cv_cmd->add_option("--grid-l1", cv_args->grid_l1, "Comma-separated lambda1 grid");
  cv_cmd->add_option("--grid-l2", cv_args->grid_l2, "Comma-separated lambda2 grid");
  cv_cmd->add_option("--seed", cv_args->seed, "Fold-split seed (printed when omitted)");
  cv_cmd->add_option("--rho", cv_args->rho, "ADMM step (pair copies)");
  cv_cmd->add_option("--phi", cv_args->phi, "ADMM step (sparse copy)");
  cv_cmd->add_option("--psi", cv_args->psi, "ADMM step (zero-sum constraint)");
  cv_cmd->add_option("--max-iters", cv_args->max_iters, "Iteration cap per fit");
  cv_cmd->add_option("--tol", cv_args->tol, "Stopping tolerance per fit");
  cv_cmd->add_option("--threads", cv_args->threads, "Worker threads over (cell, fold) jobs")
      ->check(CLI::PositiveNumber);
  cv_cmd->add_option("--out", cv_args->out, "Output report JSON")->required();
  cv_cmd->add_option("--emit-scatter", cv_args->emit_scatter,
                     "Write observed,predicted CSV for the best cell");
  cv_cmd->callback([cv_args] { run_cv(*cv_args); });

  auto predict_args = std::make_shared<PredictArgs>();
  auto* predict_cmd = app.add_subcommand("predict", "Predict responses for new samples");
  configure_subcommand(predict_cmd);
  predict_cmd->add_option("--model", predict_args->model, "Fit JSON from `fit`")->required();
  add_data_options(predict_cmd, predict_args->data, /*response_required=*/false);
  predict_cmd->add_option("--train-data", predict_args->train_data,
                          "Training CSV (for --distance neighbor weights)");
  predict_cmd->add_option("--neighbors", predict_args->neighbors,
                          "Dense CSV of neighbor weights, (new x train)");
  predict_cmd->add_option("--distance", predict_args->distance, "gower|logratio")
      ->check(CLI::IsMember({"gower", "logratio"}));
  predict_cmd->add_option("--k", predict_args->k, "Neighbor count")->check(CLI::PositiveNumber);
  predict_cmd->add_option("--mu", predict_args->mu, "Weber ADMM step");
  predict_cmd->add_option("--eta", predict_args->eta, "Weber zero-sum step");
  predict_cmd->add_option("--max-iters", predict_args->max_iters, "Weber iteration cap");
  predict_cmd->add_option("--tol", predict_args->tol, "Weber stopping tolerance");
  predict_cmd->add_option("--out", predict_args->out, "Output CSV id,predicted_response")
      ->required();
  predict_cmd->add_option("--emit-coefficients", predict_args->emit_coefficients,
                          "Also write per-sample coefficient vectors CSV");
  predict_cmd->callback([predict_args] { run_predict(*predict_args); });

  auto report_args = std::make_shared<ReportArgs>();
  auto* report_cmd = app.add_subcommand("report", "Threshold and order fitted coefficients");
  configure_subcommand(report_cmd);
  report_cmd->add_option("--model", report_args->model, "Fit JSON from `fit`")->required();
  report_cmd->add_option("--threshold", report_args->threshold,
                         "Display threshold; smaller entries shown as zero");
  report_cmd->add_option("--n-clusters", report_args->n_clusters,
                         "Cluster count for complete-linkage row ordering");
  report_cmd->add_option("--out", report_args->out, "Output report JSON")->required();
  report_cmd->add_option("--emit-table", report_args->emit_table,
                         "Write the thresholded coefficient table CSV");
  report_cmd->callback([report_args] { run_report(*report_args); });

  auto sim_args = std::make_shared<SimulateArgs>();
  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic three-cluster benchmark");
  configure_subcommand(sim_cmd);
  sim_cmd->add_option("--p", sim_args->p, "Composition dimension");
  sim_cmd->add_option("--pr", sim_args->p_keep, "Graph fidelity P_R");
  sim_cmd->add_option("--replicates", sim_args->replicates, "Replicate count");
  sim_cmd->add_option("--n-per-cluster", sim_args->n_per_cluster, "Samples per cluster");
  sim_cmd->add_option("--n-train", sim_args->n_train, "Training samples per replicate");
  sim_cmd->add_option("--n-valid", sim_args->n_valid, "Validation samples per replicate");
  sim_cmd->add_option("--noise-sd", sim_args->noise_sd, "Response noise");
  sim_cmd->add_option("--methods", sim_args->methods, "Subset of proposed,snl,cl")
      ->delimiter(',');
  sim_cmd->add_option("--seed", sim_args->seed, "Master seed (printed when omitted)");
  sim_cmd->add_option("--grid-l1", sim_args->grid_l1, "Comma-separated lambda1 grid");
  sim_cmd->add_option("--grid-l2", sim_args->grid_l2, "Comma-separated lambda2 grid");
  sim_cmd->add_option("--folds", sim_args->folds, "CV folds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--max-iters", sim_args->max_iters, "Iteration cap per fit");
  sim_cmd->add_option("--tol", sim_args->tol, "Stopping tolerance per fit");
  sim_cmd->add_option("--threads", sim_args->threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sim_args->out, "Output table CSV")->required();
  sim_cmd->callback([sim_args] { run_simulate(*sim_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    emit_error_json("cli-parse", e.what());
    return 3;
  } catch (const IoError& e) {
    emit_error_json("io", e.what());
    return 2;
  } catch (const ParseError& e) {
    emit_error_json("parse", e.what());
    return 3;
  } catch (const SolverDivergence& e) {
    emit_error_json("solver", e.what(),
                    {{"residuals",
                      {{"iteration", e.iteration()},
                       {"primal", e.primal_residual()},
                       {"dual", e.dual_residual()}}}});
    return 4;
  } catch (const ValidationError& e) {
    emit_error_json("validate", e.what());
    return 5;
  } catch (const std::exception& e) {
    emit_error_json("internal", e.what());
    return 1;
  }
  return 0;
}
