#include "drregret/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drregret/errors.hpp"

namespace drr {

using nlohmann::json;

namespace {

MatrixXd matrix_from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool same(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

// Row-major flat array, or an array of rows.
MatrixXd read_matrix(const json& node, Eigen::Index rows, Eigen::Index cols,
                     const std::string& path) {
  if (!node.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> flat;
  try {
    if (!node.empty() && node.front().is_array()) {
      if (static_cast<Eigen::Index>(node.size()) != rows) {
        throw ConfigError(path, "expected " + std::to_string(rows) + " rows, got " +
                                    std::to_string(node.size()));
      }
      for (const auto& row : node) {
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
          throw ConfigError(path, "every row must have " + std::to_string(cols) + " entries");
        }
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
    } else {
      for (const auto& v : node) flat.push_back(v.get<double>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("non-numeric entry (") + e.what() + ")");
  }
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw ConfigError(path, "expected " + std::to_string(rows * cols) +
                                " entries for a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " matrix, got " +
                                std::to_string(flat.size()));
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat[i * cols + j];
  }
  if (!m.allFinite()) throw ConfigError(path, "entries must be finite");
  return m;
}

json write_matrix(const MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

template <typename T>
T read_value(const json& node, const std::string& path) {
  try {
    return node.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("wrong type (") + e.what() + ")");
  }
}

int read_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) throw ConfigError(path, "expected an integer");
  return read_value<int>(node, path);
}

const json* child(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& node, const std::string& path) {
  if (!node.is_object()) throw ConfigError(path, "expected an object");
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return same(A, o.A) && same(B, o.B) && same(D, o.D) && same(mu_x0, o.mu_x0) &&
         same(Sigma_x0, o.Sigma_x0) && same(Sigma_w, o.Sigma_w) && same(Q, o.Q) &&
         same(R, o.R) && same(Q_f, o.Q_f) && horizon == o.horizon && alphas == o.alphas &&
         horizons == o.horizons && alpha == o.alpha && n_samples == o.n_samples &&
         n_rollouts == o.n_rollouts && true_family == o.true_family &&
         worst_family == o.worst_family && shared_streams == o.shared_streams &&
         seed == o.seed && output_dir == o.output_dir && percentiles == o.percentiles &&
         threads == o.threads && tolerances.psd == o.tolerances.psd &&
         tolerances.sym == o.tolerances.sym && tolerances.dyn == o.tolerances.dyn &&
         validation == o.validation;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.A = matrix_from_rows({{1.0, 0.2}, {0.0, 1.0}});
  c.B = matrix_from_rows({{0.06}, {0.20}});
  c.D = MatrixXd::Identity(2, 2);
  c.mu_x0 = (VectorXd(2) << -4.0, 4.0).finished();
  c.Sigma_x0 = matrix_from_rows({{0.20, 0.02}, {0.02, 0.20}});
  c.Sigma_w = matrix_from_rows({{0.10, 0.03}, {0.03, 0.20}});
  c.Q = 10.0 * MatrixXd::Identity(2, 2);
  c.R = MatrixXd::Identity(1, 1);
  c.Q_f = c.Q;
  c.horizon = 100;
  c.alphas = {0.05, 0.1, 0.2, 0.4, 0.8};
  c.horizons = {10, 25, 50, 100};
  c.alpha = 0.2;
  c.n_samples = 100;
  c.n_rollouts = 10000;
  c.seed = 20240601;
  c.output_dir = "out";
  c.percentiles = {5.0, 95.0};
  return c;
}

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "<root>");
  ExperimentConfig c = default_config();

  if (const json* sys = child(doc, "system")) {
    require_object(*sys, "system");
    auto dim = [&](const char* key, Eigen::Index fallback) -> Eigen::Index {
      const json* v = child(*sys, key);
      if (!v) return fallback;
      const int d = read_int(*v, std::string("system.") + key);
      if (d < 1) throw ConfigError(std::string("system.") + key, "must be >= 1");
      return d;
    };
    const auto n = dim("n", c.A.rows());
    const auto m = dim("m", c.B.cols());
    const auto r = dim("r", c.D.cols());
    if (const json* a = child(*sys, "A")) c.A = read_matrix(*a, n, n, "system.A");
    if (const json* b = child(*sys, "B")) c.B = read_matrix(*b, n, m, "system.B");
    if (const json* d = child(*sys, "D")) c.D = read_matrix(*d, n, r, "system.D");
  }
  const auto n = c.A.rows();
  const auto m = c.B.cols();
  const auto r = c.D.cols();

  if (const json* mom = child(doc, "moments")) {
    require_object(*mom, "moments");
    if (const json* v = child(*mom, "mu_x0")) c.mu_x0 = read_matrix(*v, n, 1, "moments.mu_x0");
    if (const json* v = child(*mom, "Sigma_x0")) {
      c.Sigma_x0 = read_matrix(*v, n, n, "moments.Sigma_x0");
    }
    if (const json* v = child(*mom, "Sigma_w")) {
      c.Sigma_w = read_matrix(*v, r, r, "moments.Sigma_w");
    }
  }
  if (const json* cost = child(doc, "cost")) {
    require_object(*cost, "cost");
    if (const json* v = child(*cost, "Q")) c.Q = read_matrix(*v, n, n, "cost.Q");
    if (const json* v = child(*cost, "R")) c.R = read_matrix(*v, m, m, "cost.R");
    if (const json* v = child(*cost, "Q_f")) {
      c.Q_f = read_matrix(*v, n, n, "cost.Q_f");
    } else if (child(*cost, "Q")) {
      c.Q_f = c.Q;
    }
    if (const json* v = child(*cost, "T")) c.horizon = read_int(*v, "cost.T");
  }
  if (const json* sweep = child(doc, "sweep")) {
    require_object(*sweep, "sweep");
    if (const json* v = child(*sweep, "alphas")) {
      c.alphas = read_value<std::vector<double>>(*v, "sweep.alphas");
    }
    if (const json* v = child(*sweep, "horizons")) {
      c.horizons = read_value<std::vector<int>>(*v, "sweep.horizons");
    }
    if (const json* v = child(*sweep, "alpha")) c.alpha = read_value<double>(*v, "sweep.alpha");
    if (const json* v = child(*sweep, "n_samples")) c.n_samples = read_int(*v, "sweep.n_samples");
    if (const json* v = child(*sweep, "n_rollouts")) {
      c.n_rollouts = read_int(*v, "sweep.n_rollouts");
    }
  }
  if (const json* dist = child(doc, "distributions")) {
    require_object(*dist, "distributions");
    auto family = [&](const char* key, Family& out) {
      const json* v = child(*dist, key);
      if (!v) return;
      const std::string path = std::string("distributions.") + key;
      try {
        out = parse_family(read_value<std::string>(*v, path));
      } catch (const InvalidInput& e) {
        throw ConfigError(path, e.what());
      }
    };
    family("true", c.true_family);
    family("worst", c.worst_family);
    if (const json* v = child(*dist, "shared_streams")) {
      c.shared_streams = read_value<bool>(*v, "distributions.shared_streams");
    }
  }
  if (const json* v = child(doc, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative 64-bit integer");
    }
    c.seed = v->get<std::uint64_t>();
  }
  if (const json* v = child(doc, "output_dir")) {
    c.output_dir = read_value<std::string>(*v, "output_dir");
  }
  if (const json* v = child(doc, "percentiles")) {
    c.percentiles = read_value<std::vector<double>>(*v, "percentiles");
  }
  if (const json* v = child(doc, "threads")) c.threads = read_int(*v, "threads");
  if (const json* tol = child(doc, "tolerances")) {
    require_object(*tol, "tolerances");
    if (const json* v = child(*tol, "psd")) c.tolerances.psd = read_value<double>(*v, "tolerances.psd");
    if (const json* v = child(*tol, "sym")) c.tolerances.sym = read_value<double>(*v, "tolerances.sym");
    if (const json* v = child(*tol, "dyn")) c.tolerances.dyn = read_value<double>(*v, "tolerances.dyn");
  }
  if (const json* val = child(doc, "validation")) {
    require_object(*val, "validation");
    auto& s = c.validation;
    auto num = [&](const char* key, double& out) {
      if (const json* v = child(*val, key)) {
        out = read_value<double>(*v, std::string("validation.") + key);
      }
    };
    auto integer = [&](const char* key, int& out) {
      if (const json* v = child(*val, key)) out = read_int(*v, std::string("validation.") + key);
    };
    integer("instances", s.instances);
    integer("w2_instances", s.w2_instances);
    integer("mc_rollouts", s.mc_rollouts);
    integer("moment_step", s.moment_step);
    num("quadratic_tol", s.quadratic_tol);
    num("linear_tol", s.linear_tol);
    num("w2_tol", s.w2_tol);
    num("moment_rel_tol_gaussian", s.moment_rel_tol_gaussian);
    num("moment_rel_tol_laplacian", s.moment_rel_tol_laplacian);
    num("pseudo_regret_tol", s.pseudo_regret_tol);
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["system"] = {{"n", c.A.rows()}, {"m", c.B.cols()}, {"r", c.D.cols()},
                   {"A", write_matrix(c.A)}, {"B", write_matrix(c.B)},
                   {"D", write_matrix(c.D)}};
  doc["moments"] = {{"mu_x0", write_matrix(c.mu_x0)},
                    {"Sigma_x0", write_matrix(c.Sigma_x0)},
                    {"Sigma_w", write_matrix(c.Sigma_w)}};
  doc["cost"] = {{"Q", write_matrix(c.Q)}, {"R", write_matrix(c.R)},
                 {"Q_f", write_matrix(c.Q_f)}, {"T", c.horizon}};
  doc["sweep"] = {{"alphas", c.alphas}, {"horizons", c.horizons}, {"alpha", c.alpha},
                  {"n_samples", c.n_samples}, {"n_rollouts", c.n_rollouts}};
  doc["distributions"] = {{"true", std::string(to_string(c.true_family))},
                          {"worst", std::string(to_string(c.worst_family))},
                          {"shared_streams", c.shared_streams}};
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["percentiles"] = c.percentiles;
  doc["threads"] = c.threads;
  doc["tolerances"] = {{"psd", c.tolerances.psd}, {"sym", c.tolerances.sym},
                       {"dyn", c.tolerances.dyn}};
  const auto& s = c.validation;
  doc["validation"] = {{"instances", s.instances},
                       {"w2_instances", s.w2_instances},
                       {"mc_rollouts", s.mc_rollouts},
                       {"moment_step", s.moment_step},
                       {"quadratic_tol", s.quadratic_tol},
                       {"linear_tol", s.linear_tol},
                       {"w2_tol", s.w2_tol},
                       {"moment_rel_tol_gaussian", s.moment_rel_tol_gaussian},
                       {"moment_rel_tol_laplacian", s.moment_rel_tol_laplacian},
                       {"pseudo_regret_tol", s.pseudo_regret_tol}};
  return doc;
}

void validate_config(const ExperimentConfig& c) {
  const Tolerances& tol = c.tolerances;
  try {
    LinearSystem(c.A, c.B, c.D);
  } catch (const Error& e) {
    throw ConfigError("system", e.what());
  }
  const auto n = c.A.rows();
  const auto r = c.D.cols();
  const auto m = c.B.cols();
  auto psd = [&](const MatrixXd& mat, Eigen::Index size, const char* path, bool definite) {
    if (mat.rows() != size || mat.cols() != size) {
      throw ConfigError(path, "expected a " + std::to_string(size) + "x" +
                                  std::to_string(size) + " matrix");
    }
    try {
      if (definite) {
        require_pd(mat, path, tol);
      } else {
        require_psd(mat, path, tol);
      }
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  };
  if (c.mu_x0.size() != n) throw ConfigError("moments.mu_x0", "expected " + std::to_string(n) + " entries");
  psd(c.Sigma_x0, n, "moments.Sigma_x0", false);
  psd(c.Sigma_w, r, "moments.Sigma_w", false);
  psd(c.Q, n, "cost.Q", false);
  psd(c.R, m, "cost.R", true);
  psd(c.Q_f, n, "cost.Q_f", false);
  if (c.horizon < 0) throw ConfigError("cost.T", "must be >= 0");
  if (c.alphas.empty()) throw ConfigError("sweep.alphas", "must not be empty");
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("sweep.alphas", "every alpha must lie in (0, 1)");
  }
  if (c.horizons.empty()) throw ConfigError("sweep.horizons", "must not be empty");
  for (int h : c.horizons) {
    if (h < 0) throw ConfigError("sweep.horizons", "horizons must be >= 0");
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("sweep.alpha", "must lie in (0, 1)");
  if (c.n_samples < 1) throw ConfigError("sweep.n_samples", "must be >= 1");
  if (c.n_rollouts < 1) throw ConfigError("sweep.n_rollouts", "must be >= 1");
  if (c.percentiles.empty()) throw ConfigError("percentiles", "must not be empty");
  for (double p : c.percentiles) {
    if (!(p > 0.0 && p < 100.0)) throw ConfigError("percentiles", "values must lie in (0, 100)");
  }
  if (!std::is_sorted(c.percentiles.begin(), c.percentiles.end())) {
    throw ConfigError("percentiles", "must be sorted ascending");
  }
  if (c.threads < 0) throw ConfigError("threads", "must be >= 0 (0 = auto)");
  if (!(tol.psd >= 0.0) || !(tol.sym >= 0.0) || !(tol.dyn >= 0.0)) {
    throw ConfigError("tolerances", "tolerances must be >= 0");
  }
  const auto& s = c.validation;
  if (s.instances < 1) throw ConfigError("validation.instances", "must be >= 1");
  if (s.w2_instances < 1) throw ConfigError("validation.w2_instances", "must be >= 1");
  if (s.mc_rollouts < 2) throw ConfigError("validation.mc_rollouts", "must be >= 2");
  if (s.moment_step < 0) throw ConfigError("validation.moment_step", "must be >= 0");
}

LinearSystem make_system(const ExperimentConfig& c) { return LinearSystem(c.A, c.B, c.D); }

CostSpec make_cost(const ExperimentConfig& c, int horizon) {
  return CostSpec(c.Q, c.R, c.Q_f, horizon, c.tolerances);
}

MomentAmbiguitySet x0_set(const ExperimentConfig& c) {
  return MomentAmbiguitySet(c.mu_x0, c.Sigma_x0, c.tolerances);
}

MomentAmbiguitySet w_set(const ExperimentConfig& c) {
  return MomentAmbiguitySet(VectorXd::Zero(c.D.cols()), c.Sigma_w, c.tolerances);
}

ModelPair true_models(const ExperimentConfig& c) {
  return {DistributionModel{c.true_family, x0_set(c)},
          DistributionModel{c.true_family, w_set(c)}};
}

ModelPair worst_models(const ExperimentConfig& c) {
  return {DistributionModel{c.worst_family, x0_set(c)},
          DistributionModel{c.worst_family, w_set(c)}};
}

RoleStreams role_streams(const ExperimentConfig& c) {
  const RngSpec base{c.seed, 0};
  return c.shared_streams ? RoleStreams::shared(base) : RoleStreams::independent(base);
}

}  // namespace drr
