#include "hrmsbo/harness.hpp"

#include "hrmsbo/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hrmsbo::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTagRunSeed = 0xD1;
constexpr std::uint64_t kTagTruthSeed = 0xD2;
constexpr std::uint64_t kTagFidelitySeed = 0xD3;

struct RunSpec {
  int index = 0;
  acq::Kind kind = acq::Kind::ucb;
  int rs = 1;
  int ms = 1;
  int repeat = 0;
  std::string run_id;
  std::uint64_t seed = 0;
};

std::vector<RunSpec> enumerate_runs(const ExperimentPlan& plan) {
  std::vector<RunSpec> runs;
  runs.reserve(plan.total_runs());
  int index = 0;
  for (acq::Kind kind : plan.acquisitions) {
    for (int rs : plan.rs_levels) {
      for (int ms : plan.ms_levels) {
        for (int repeat = 0; repeat < plan.repeats; ++repeat) {
          RunSpec spec;
          spec.index = index++;
          spec.kind = kind;
          spec.rs = rs;
          spec.ms = ms;
          spec.repeat = repeat;
          spec.run_id = make_run_id(kind, rs, ms, repeat);
          spec.seed = derive_run_seed(plan.base_seed, kind, rs, ms, repeat);
          runs.push_back(std::move(spec));
        }
      }
    }
  }
  return runs;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

json require_key(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("missing key: ") + key);
  }
  return j.at(key);
}

int get_positive_int(const json& j, const char* key) {
  const json v = require_key(j, key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
    throw std::invalid_argument(std::string(key) + " must be a positive integer");
  }
  return static_cast<int>(v.get<std::int64_t>());
}

// Sample standard deviation; absent below two values.
std::optional<double> sample_sd(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double m = 0.0;
  for (double v : values) m += v;
  return m / static_cast<double>(values.size());
}

std::string opt_field(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

void ExperimentPlan::validate() const {
  bench::find_objective(objective);  // throws for unknown names
  if (acquisitions.empty()) throw std::invalid_argument("acquisitions is empty");
  if (rs_levels.empty()) throw std::invalid_argument("rs_levels is empty");
  if (ms_levels.empty()) throw std::invalid_argument("ms_levels is empty");
  auto distinct = [](auto v, const char* what) {
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
      throw std::invalid_argument(std::string(what) + " has duplicates");
    }
  };
  distinct(acquisitions, "acquisitions");
  distinct(rs_levels, "rs_levels");
  distinct(ms_levels, "ms_levels");
  for (int rs : rs_levels) {
    if (rs < 1) throw std::invalid_argument("rs_levels entries must be >= 1");
  }
  for (int ms : ms_levels) {
    if (ms < 1) throw std::invalid_argument("ms_levels entries must be >= 1");
  }
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (budget_evals < 1) throw std::invalid_argument("budget_evals must be >= 1");
  if (budget_wall_ms && *budget_wall_ms < 1) {
    throw std::invalid_argument("budget_wall_ms must be >= 1");
  }
  if (n_seed < 1) throw std::invalid_argument("n_seed must be >= 1");
}

int ExperimentPlan::total_runs() const {
  return static_cast<int>(acquisitions.size() * rs_levels.size() *
                          ms_levels.size()) *
         repeats;
}

ExperimentPlan plan_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("plan must be a JSON object");
  static const std::set<std::string> known = {
      "objective", "acquisitions", "rs_levels",   "ms_levels", "repeats",
      "budget_evals", "budget_wall_ms", "base_seed", "n_seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument("unknown plan key: " + key);
    }
  }

  ExperimentPlan plan;
  const json obj = require_key(j, "objective");
  if (!obj.is_string()) throw std::invalid_argument("objective must be a string");
  plan.objective = obj.get<std::string>();

  const json acqs = require_key(j, "acquisitions");
  if (!acqs.is_array() || acqs.empty()) {
    throw std::invalid_argument("acquisitions must be a nonempty array");
  }
  plan.acquisitions.clear();
  for (const auto& a : acqs) {
    if (!a.is_string()) throw std::invalid_argument("acquisitions entries must be strings");
    plan.acquisitions.push_back(acq::kind_from_string(a.get<std::string>()));
  }

  auto read_levels = [&](const char* key) {
    const json levels = require_key(j, key);
    if (!levels.is_array() || levels.empty()) {
      throw std::invalid_argument(std::string(key) + " must be a nonempty array");
    }
    std::vector<int> out;
    for (const auto& v : levels) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw std::invalid_argument(std::string(key) + " entries must be positive integers");
      }
      out.push_back(static_cast<int>(v.get<std::int64_t>()));
    }
    return out;
  };
  plan.rs_levels = read_levels("rs_levels");
  plan.ms_levels = read_levels("ms_levels");

  plan.repeats = get_positive_int(j, "repeats");
  plan.budget_evals = get_positive_int(j, "budget_evals");
  if (j.contains("budget_wall_ms") && !j.at("budget_wall_ms").is_null()) {
    const json v = j.at("budget_wall_ms");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      throw std::invalid_argument("budget_wall_ms must be a positive integer");
    }
    plan.budget_wall_ms = v.get<std::int64_t>();
  }

  const json seed = require_key(j, "base_seed");
  if (!seed.is_number_integer() && !seed.is_number_unsigned()) {
    throw std::invalid_argument("base_seed must be an integer");
  }
  if (seed.is_number_integer() && seed.get<std::int64_t>() < 0 &&
      !seed.is_number_unsigned()) {
    throw std::invalid_argument("base_seed must be non-negative");
  }
  plan.base_seed = seed.get<std::uint64_t>();

  plan.n_seed = get_positive_int(j, "n_seed");
  plan.validate();
  return plan;
}

json plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["objective"] = plan.objective;
  json acqs = json::array();
  for (acq::Kind k : plan.acquisitions) acqs.push_back(acq::to_string(k));
  j["acquisitions"] = std::move(acqs);
  j["rs_levels"] = plan.rs_levels;
  j["ms_levels"] = plan.ms_levels;
  j["repeats"] = plan.repeats;
  j["budget_evals"] = plan.budget_evals;
  if (plan.budget_wall_ms) j["budget_wall_ms"] = *plan.budget_wall_ms;
  j["base_seed"] = plan.base_seed;
  j["n_seed"] = plan.n_seed;
  return j;
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, acq::Kind kind, int rs,
                              int ms, int repeat_index) {
  return mix_key(base_seed,
                 {kTagRunSeed, static_cast<std::uint64_t>(kind),
                  static_cast<std::uint64_t>(rs), static_cast<std::uint64_t>(ms),
                  static_cast<std::uint64_t>(repeat_index)});
}

std::string make_run_id(acq::Kind kind, int rs, int ms, int repeat_index) {
  return acq::to_string(kind) + "_rs" + std::to_string(rs) + "_ms" +
         std::to_string(ms) + "_r" + std::to_string(repeat_index);
}

std::vector<std::string> record_header(int dim) {
  std::vector<std::string> h = {"run_id", "acquisition", "rs", "ms",
                                "repeat_index", "seed"};
  for (int i = 1; i <= dim; ++i) h.push_back("x_hat_" + std::to_string(i));
  for (const char* name :
       {"y_hat", "x_err", "y_err", "evals_used", "iters", "terminated_early",
        "termination_reason", "rmse_mean", "rmse_sd", "nlpd", "wall_ms"}) {
    h.push_back(name);
  }
  return h;
}

std::vector<std::string> record_to_row(const ExperimentRecord& r) {
  std::vector<std::string> row = {r.run_id,
                                  r.acquisition,
                                  csv::format_int(r.rs),
                                  csv::format_int(r.ms),
                                  csv::format_int(r.repeat_index),
                                  csv::format_u64(r.seed)};
  for (Eigen::Index i = 0; i < r.x_hat.size(); ++i) {
    row.push_back(csv::format_double(r.x_hat[i]));
  }
  row.push_back(csv::format_double(r.y_hat));
  row.push_back(csv::format_double(r.x_err));
  row.push_back(csv::format_double(r.y_err));
  row.push_back(csv::format_int(r.evals_used));
  row.push_back(csv::format_int(r.iters));
  row.push_back(csv::format_bool(r.terminated_early));
  row.push_back(r.termination_reason);
  row.push_back(csv::format_double(r.fidelity.rmse_mean));
  row.push_back(csv::format_double(r.fidelity.rmse_sd));
  row.push_back(csv::format_double(r.fidelity.nlpd));
  row.push_back(csv::format_int(r.wall_ms));
  return row;
}

ExperimentRecord record_from_row(const std::vector<std::string>& row, int dim) {
  const std::size_t expected = 6 + static_cast<std::size_t>(dim) + 11;
  if (row.size() != expected) {
    throw std::invalid_argument("record row has wrong field count");
  }
  ExperimentRecord r;
  std::size_t i = 0;
  r.run_id = row[i++];
  r.acquisition = row[i++];
  r.rs = static_cast<int>(csv::parse_int(row[i++]));
  r.ms = static_cast<int>(csv::parse_int(row[i++]));
  r.repeat_index = static_cast<int>(csv::parse_int(row[i++]));
  r.seed = csv::parse_u64(row[i++]);
  r.x_hat = Vec(dim);
  for (int k = 0; k < dim; ++k) r.x_hat[k] = csv::parse_double(row[i++]);
  r.y_hat = csv::parse_double(row[i++]);
  r.x_err = csv::parse_double(row[i++]);
  r.y_err = csv::parse_double(row[i++]);
  r.evals_used = static_cast<int>(csv::parse_int(row[i++]));
  r.iters = static_cast<int>(csv::parse_int(row[i++]));
  r.terminated_early = csv::parse_bool(row[i++]);
  r.termination_reason = row[i++];
  r.fidelity.rmse_mean = csv::parse_double(row[i++]);
  r.fidelity.rmse_sd = csv::parse_double(row[i++]);
  r.fidelity.nlpd = csv::parse_double(row[i++]);
  r.wall_ms = csv::parse_int(row[i++]);
  return r;
}

nlohmann::json model_to_json(const gp::GPModel& model) {
  json j;
  j["dim"] = model.dim();
  json hyper;
  std::vector<double> ls(model.hyper().log_lengthscales.data(),
                         model.hyper().log_lengthscales.data() + model.dim());
  hyper["log_lengthscales"] = ls;
  hyper["log_signal_sd"] = model.hyper().log_signal_sd;
  hyper["log_noise_sd"] = model.hyper().log_noise_sd;
  j["hyper"] = std::move(hyper);

  json points = json::array();
  json targets = json::array();
  for (int i = 0; i < model.n(); ++i) {
    const Vec& p = model.data().points[i];
    points.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    targets.push_back(model.data().targets[i]);
  }
  j["points"] = std::move(points);
  j["targets"] = std::move(targets);

  if (model.input_bounds()) {
    const Bounds& b = *model.input_bounds();
    j["input_bounds"] = {
        {"lower", std::vector<double>(b.lower.data(), b.lower.data() + b.dim())},
        {"upper", std::vector<double>(b.upper.data(), b.upper.data() + b.dim())}};
  } else {
    j["input_bounds"] = nullptr;
  }
  j["output"] = {{"shift", model.output().shift}, {"scale", model.output().scale}};
  return j;
}

gp::GPModel model_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  gp::Hyperparameters h;
  const auto ls = j.at("hyper").at("log_lengthscales").get<std::vector<double>>();
  h.log_lengthscales = Eigen::Map<const Vec>(ls.data(), ls.size());
  h.log_signal_sd = j.at("hyper").at("log_signal_sd").get<double>();
  h.log_noise_sd = j.at("hyper").at("log_noise_sd").get<double>();

  Dataset data;
  const auto& points = j.at("points");
  const auto& targets = j.at("targets");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points[i].get<std::vector<double>>();
    data.add(Eigen::Map<const Vec>(p.data(), p.size()), targets[i].get<double>());
  }

  std::optional<Bounds> bounds;
  if (!j.at("input_bounds").is_null()) {
    const auto lo = j.at("input_bounds").at("lower").get<std::vector<double>>();
    const auto hi = j.at("input_bounds").at("upper").get<std::vector<double>>();
    bounds = Bounds(Eigen::Map<const Vec>(lo.data(), lo.size()),
                    Eigen::Map<const Vec>(hi.data(), hi.size()));
  }
  gp::OutputTransform output;
  output.shift = j.at("output").at("shift").get<double>();
  output.scale = j.at("output").at("scale").get<double>();

  auto restored = gp::GPModel::restore(std::move(data), h, std::move(bounds), output);
  if (std::holds_alternative<gp::IllConditioned>(restored)) {
    throw std::invalid_argument("persisted model no longer factorizes");
  }
  (void)dim;
  return std::move(std::get<gp::GPModel>(restored));
}

void save_ground_truth(const bench::GroundTruthModel& truth, std::uint64_t seed,
                       const fs::path& path) {
  json j;
  j["objective"] = truth.objective.name;
  j["grid_per_dim"] = truth.grid_per_dim;
  j["reps"] = truth.reps;
  j["seed"] = seed;
  j["points_used"] = truth.points_used;
  j["model"] = model_to_json(truth.model);
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

std::optional<bench::GroundTruthModel> load_ground_truth(
    const fs::path& path, const std::string& objective_name,
    const bench::GroundTruthOptions& options, std::uint64_t seed) {
  if (!fs::exists(path)) return std::nullopt;
  json j = json::parse(read_file(path));
  if (j.at("objective").get<std::string>() != objective_name ||
      j.at("grid_per_dim").get<int>() != options.grid_per_dim ||
      j.at("reps").get<int>() != options.reps ||
      j.at("seed").get<std::uint64_t>() != seed) {
    return std::nullopt;  // cache mismatch: rebuild
  }
  bench::GroundTruthModel truth;
  truth.model = model_from_json(j.at("model"));
  truth.objective = bench::find_objective(objective_name);
  truth.grid_per_dim = j.at("grid_per_dim").get<int>();
  truth.reps = j.at("reps").get<int>();
  truth.points_used = j.at("points_used").get<int>();
  return truth;
}

ExperimentPlan load_plan(const fs::path& path) {
  return plan_from_json(json::parse(read_file(path)));
}

std::vector<ExperimentRecord> load_records(const fs::path& path, int dim) {
  std::vector<ExperimentRecord> records;
  if (!fs::exists(path)) return records;
  const std::vector<std::string> lines = read_lines(read_file(path));
  if (lines.empty()) return records;
  const std::vector<std::string> expected_header = record_header(dim);
  if (csv::split_row(lines[0]) != expected_header) {
    throw std::invalid_argument("records.csv header does not match the plan's objective");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      records.push_back(record_from_row(csv::split_row(lines[i]), dim));
    } catch (const std::exception&) {
      if (i + 1 == lines.size()) break;  // truncated final row: resume point
      throw;
    }
  }
  return records;
}

std::vector<std::string> fig5_selection(const ExperimentPlan& plan) {
  // Ground truth plus, per acquisition, the plainest and the heaviest cell
  // (first repeat of each): enough to plot the SS-vs-HRMS surface contrast.
  std::vector<std::string> ids;
  const int rs_lo = *std::min_element(plan.rs_levels.begin(), plan.rs_levels.end());
  const int ms_lo = *std::min_element(plan.ms_levels.begin(), plan.ms_levels.end());
  const int rs_hi = *std::max_element(plan.rs_levels.begin(), plan.rs_levels.end());
  const int ms_hi = *std::max_element(plan.ms_levels.begin(), plan.ms_levels.end());
  for (acq::Kind kind : plan.acquisitions) {
    ids.push_back(make_run_id(kind, rs_lo, ms_lo, 0));
    if (rs_hi != rs_lo || ms_hi != ms_lo) {
      ids.push_back(make_run_id(kind, rs_hi, ms_hi, 0));
    }
  }
  return ids;
}

std::vector<SummaryRow> summarize(const ExperimentPlan& plan,
                                  const std::vector<ExperimentRecord>& records) {
  std::vector<SummaryRow> rows;

  auto cell_records = [&](acq::Kind kind, int rs, int ms) {
    std::vector<const ExperimentRecord*> out;
    const std::string name = acq::to_string(kind);
    for (const auto& r : records) {
      if (r.acquisition == name && r.rs == rs && r.ms == ms) out.push_back(&r);
    }
    // Permutation invariance: aggregate in repeat_index order.
    std::sort(out.begin(), out.end(),
              [](const ExperimentRecord* a, const ExperimentRecord* b) {
                return a->repeat_index < b->repeat_index;
              });
    return out;
  };

  // First pass: SS sd(x_err) per acquisition, for the comparison column.
  std::map<std::string, std::optional<double>> ss_sd;
  for (acq::Kind kind : plan.acquisitions) {
    std::vector<double> xe;
    for (const auto* r : cell_records(kind, 1, 1)) {
      if (!r->failed()) xe.push_back(r->x_err);
    }
    ss_sd[acq::to_string(kind)] = sample_sd(xe);
  }

  for (acq::Kind kind : plan.acquisitions) {
    for (int rs : plan.rs_levels) {
      for (int ms : plan.ms_levels) {
        SummaryRow row;
        row.acquisition = acq::to_string(kind);
        row.rs = rs;
        row.ms = ms;
        std::vector<double> xe, ye, rmse, nlpd, evals, iters;
        int early = 0;
        for (const auto* r : cell_records(kind, rs, ms)) {
          if (r->failed()) {
            ++row.n_failed;
            continue;
          }
          ++row.n_runs;
          if (r->terminated_early) ++early;
          xe.push_back(r->x_err);
          ye.push_back(r->y_err);
          rmse.push_back(r->fidelity.rmse_mean);
          nlpd.push_back(r->fidelity.nlpd);
          evals.push_back(r->evals_used);
          iters.push_back(r->iters);
        }
        if (row.n_runs > 0) {
          row.early_term_rate = static_cast<double>(early) / row.n_runs;
          row.mean_evals = mean_of(evals);
          row.mean_iters = mean_of(iters);
          row.mean_x_err = mean_of(xe);
          row.mean_y_err = mean_of(ye);
          row.mean_rmse_mean = mean_of(rmse);
          row.mean_nlpd = mean_of(nlpd);
        }
        row.sd_x_err = sample_sd(xe);
        row.sd_y_err = sample_sd(ye);
        row.sd_rmse_mean = sample_sd(rmse);
        row.sd_nlpd = sample_sd(nlpd);
        const auto& ss = ss_sd[row.acquisition];
        if (row.sd_x_err && ss && *ss > 0.0) {
          row.x_err_sd_ratio_vs_ss = *row.sd_x_err / *ss;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

void write_records_csv(const ExperimentPlan& plan,
                       const std::vector<ExperimentRecord>& records,
                       const fs::path& path) {
  const int dim = bench::find_objective(plan.objective).dim();
  auto out = open_for_write(path);
  out << csv::join_row(record_header(dim)) << '\n';
  for (const auto& r : records) out << csv::join_row(record_to_row(r)) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

void write_summary_csv(const ExperimentPlan& plan,
                       const std::vector<ExperimentRecord>& records,
                       const fs::path& path) {
  auto out = open_for_write(path);
  out << csv::join_row({"acquisition", "rs", "ms", "n_runs", "n_failed",
                        "early_term_rate", "mean_evals", "mean_iters",
                        "mean_x_err", "sd_x_err", "mean_y_err", "sd_y_err",
                        "mean_rmse_mean", "sd_rmse_mean", "mean_nlpd",
                        "sd_nlpd", "x_err_sd_ratio_vs_ss"})
      << '\n';
  for (const SummaryRow& row : summarize(plan, records)) {
    out << csv::join_row({row.acquisition, csv::format_int(row.rs),
                          csv::format_int(row.ms), csv::format_int(row.n_runs),
                          csv::format_int(row.n_failed),
                          csv::format_double(row.early_term_rate),
                          csv::format_double(row.mean_evals),
                          csv::format_double(row.mean_iters),
                          csv::format_double(row.mean_x_err),
                          opt_field(row.sd_x_err),
                          csv::format_double(row.mean_y_err),
                          opt_field(row.sd_y_err),
                          csv::format_double(row.mean_rmse_mean),
                          opt_field(row.sd_rmse_mean),
                          csv::format_double(row.mean_nlpd),
                          opt_field(row.sd_nlpd),
                          opt_field(row.x_err_sd_ratio_vs_ss)})
        << '\n';
  }
  if (!out) throw IoError("cannot write " + path.string());
}

void write_plotdata(const ExperimentPlan& plan,
                    const std::vector<ExperimentRecord>& records,
                    const fs::path& dir) {
  const bench::SyntheticObjective& objective = bench::find_objective(plan.objective);
  const int dim = objective.dim();
  const fs::path plotdir = dir / "plotdata";
  std::error_code ec;
  fs::create_directories(plotdir, ec);
  if (ec) throw IoError("cannot create " + plotdir.string());

  {  // fig3: recommendation scatter
    auto out = open_for_write(plotdir / "fig3_scatter.csv");
    std::vector<std::string> header = {"acquisition", "rs", "ms", "repeat_index"};
    for (int i = 1; i <= dim; ++i) header.push_back("x" + std::to_string(i) + "_hat");
    header.push_back("y_hat");
    out << csv::join_row(header) << '\n';
    for (const auto& r : records) {
      if (r.failed()) continue;
      std::vector<std::string> row = {r.acquisition, csv::format_int(r.rs),
                                      csv::format_int(r.ms),
                                      csv::format_int(r.repeat_index)};
      for (Eigen::Index i = 0; i < r.x_hat.size(); ++i) {
        row.push_back(csv::format_double(r.x_hat[i]));
      }
      row.push_back(csv::format_double(r.y_hat));
      out << csv::join_row(row) << '\n';
    }
  }

  {  // fig4: iteration/evaluation counts
    auto out = open_for_write(plotdir / "fig4_counts.csv");
    out << csv::join_row({"acquisition", "rs", "ms", "repeat_index", "iters",
                          "evals_used"})
        << '\n';
    for (const auto& r : records) {
      if (r.failed()) continue;
      out << csv::join_row({r.acquisition, csv::format_int(r.rs),
                            csv::format_int(r.ms),
                            csv::format_int(r.repeat_index),
                            csv::format_int(r.iters),
                            csv::format_int(r.evals_used)})
          << '\n';
    }
  }

  // fig5: posterior surfaces for the ground truth and the selected runs,
  // available only when the run directory carries the persisted models.
  const fs::path truth_path = dir / "truth.json";
  if (!fs::exists(truth_path)) {
    std::cerr << "note: " << truth_path.string()
              << " not found; skipping fig5_surfaces.csv\n";
    return;
  }
  json tj = json::parse(read_file(truth_path));
  const gp::GPModel truth_model = model_from_json(tj.at("model"));
  const std::vector<Vec> grid = bench::audit_grid(objective.bounds, 101);

  auto out = open_for_write(plotdir / "fig5_surfaces.csv");
  std::vector<std::string> header = {"surface"};
  for (int i = 1; i <= dim; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("mu");
  header.push_back("sigma");
  out << csv::join_row(header) << '\n';

  auto emit_surface = [&](const std::string& name, const gp::GPModel& model) {
    Vec mean, variance;
    model.predict(grid, mean, variance);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::vector<std::string> row = {name};
      for (Eigen::Index i = 0; i < grid[g].size(); ++i) {
        row.push_back(csv::format_double(grid[g][i]));
      }
      row.push_back(csv::format_double(mean[g]));
      row.push_back(csv::format_double(std::sqrt(std::max(variance[g], 0.0))));
      out << csv::join_row(row) << '\n';
    }
  };

  emit_surface("truth", truth_model);
  for (const std::string& run_id : fig5_selection(plan)) {
    const fs::path model_path = dir / "models" / (run_id + ".json");
    if (!fs::exists(model_path)) continue;
    emit_surface(run_id, model_from_json(json::parse(read_file(model_path))));
  }
  if (!out) throw IoError("cannot write fig5_surfaces.csv");
}

}  // namespace

void export_reports(const ExperimentPlan& plan,
                    const std::vector<ExperimentRecord>& records,
                    const fs::path& dir) {
  write_summary_csv(plan, records, dir / "summary.csv");
  write_plotdata(plan, records, dir);
}

void export_all(const ExperimentPlan& plan,
                const std::vector<ExperimentRecord>& records,
                const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  write_records_csv(plan, records, dir / "records.csv");
  export_reports(plan, records, dir);
}

void regenerate_reports(const fs::path& dir) {
  const ExperimentPlan plan = load_plan(dir / "plan.json");
  const int dim = bench::find_objective(plan.objective).dim();
  if (!fs::exists(dir / "records.csv")) {
    throw IoError("cannot read " + (dir / "records.csv").string());
  }
  const auto records = load_records(dir / "records.csv", dim);
  export_reports(plan, records, dir);
}

namespace {

ExperimentRecord execute_run(const RunSpec& spec, const ExperimentPlan& plan,
                             const bench::SyntheticObjective& objective,
                             const bench::GroundTruthModel& truth,
                             std::uint64_t fidelity_seed,
                             const GridOptions& options) {
  ExperimentRecord record;
  record.run_id = spec.run_id;
  record.acquisition = acq::to_string(spec.kind);
  record.rs = spec.rs;
  record.ms = spec.ms;
  record.repeat_index = spec.repeat;
  record.seed = spec.seed;
  record.x_hat = Vec::Zero(objective.dim());

  try {
    opt::HRMSConfig config;
    config.kind = spec.kind;
    config.rs = spec.rs;
    config.ms = spec.ms;
    config.bounds = objective.bounds;
    config.seed = spec.seed;
    config.n_seed = plan.n_seed;
    config.budget_evals = plan.budget_evals;
    config.budget_wall_ms = plan.budget_wall_ms;

    bench::SyntheticHandle handle(objective);
    const auto start = std::chrono::steady_clock::now();
    opt::RunResult result = opt::run(config, handle);
    record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();

    record.x_hat = result.x_hat;
    record.y_hat = result.y_hat;
    record.x_err = (result.x_hat - objective.true_min_x).norm();
    record.y_err = std::abs(result.y_hat - objective.true_min_y);
    record.evals_used = result.evals_used;
    record.iters = result.iterations;
    record.terminated_early = result.reason == opt::TerminationReason::ill_conditioned;
    record.termination_reason = to_string(result.reason);
    record.fidelity = bench::fidelity(result.model, truth, fidelity_seed,
                                      options.fidelity);

    if (options.save_selected_models && !options.out_dir.empty()) {
      const auto selected = fig5_selection(plan);
      if (std::find(selected.begin(), selected.end(), spec.run_id) !=
          selected.end()) {
        const fs::path dir = options.out_dir / "models";
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!ec) {
          auto out = open_for_write(dir / (spec.run_id + ".json"));
          out << model_to_json(result.model).dump(2) << '\n';
        }
      }
    }
  } catch (const std::exception& e) {
    record.termination_reason = "error";
    record.terminated_early = true;
    std::cerr << "run " << spec.run_id << " failed: " << e.what() << '\n';
  }
  return record;
}

}  // namespace

GridResult run_grid(const ExperimentPlan& plan, const GridOptions& options) {
  plan.validate();
  if (options.parallelism < 1) {
    throw std::invalid_argument("parallelism must be >= 1");
  }
  const bench::SyntheticObjective& objective = bench::find_objective(plan.objective);
  const std::vector<RunSpec> runs = enumerate_runs(plan);
  const int total = static_cast<int>(runs.size());

  const bool persist = !options.out_dir.empty();
  if (persist) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string());
  }

  // Ground truth: load the cached build when present and matching.
  const std::uint64_t truth_seed = mix_key(plan.base_seed, {kTagTruthSeed});
  const std::uint64_t fidelity_seed = mix_key(plan.base_seed, {kTagFidelitySeed});
  std::optional<bench::GroundTruthModel> truth;
  if (persist) {
    truth = load_ground_truth(options.out_dir / "truth.json", plan.objective,
                              options.truth, truth_seed);
  }
  if (!truth) {
    truth = bench::build_ground_truth(objective, truth_seed, options.truth);
    if (persist) {
      save_ground_truth(*truth, truth_seed, options.out_dir / "truth.json");
    }
  }

  // Resume: keep the completed prefix of records.csv, in run order.
  std::vector<ExperimentRecord> records;
  if (persist) {
    records = load_records(options.out_dir / "records.csv", objective.dim());
    if (static_cast<int>(records.size()) > total) {
      throw std::invalid_argument("records.csv holds more rows than the plan defines");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].run_id != runs[i].run_id) {
        throw std::invalid_argument(
            "records.csv does not match the plan (row " + std::to_string(i + 1) +
            " is " + records[i].run_id + ", expected " + runs[i].run_id + ")");
      }
    }
  }
  const int start_index = static_cast<int>(records.size());

  // Echo the plan next to the results.
  if (persist) {
    auto out = open_for_write(options.out_dir / "plan.json");
    out << plan_to_json(plan).dump(2) << '\n';
    if (!out) throw IoError("cannot write plan.json");
  }

  // Incremental, ordered records.csv writer (crash-safe resume point).
  std::ofstream incremental;
  if (persist) {
    incremental.open(options.out_dir / "records.csv",
                     std::ios::binary | std::ios::trunc);
    if (!incremental) throw IoError("cannot write records.csv");
    incremental << csv::join_row(record_header(objective.dim())) << '\n';
    for (const auto& r : records) {
      incremental << csv::join_row(record_to_row(r)) << '\n';
    }
    incremental.flush();
  }

  if (start_index < total) {
    std::vector<std::optional<ExperimentRecord>> slots(total);
    std::mutex mutex;
    std::condition_variable done;
    std::atomic<int> next{start_index};

    auto worker = [&] {
      while (true) {
        const int index = next.fetch_add(1);
        if (index >= total) break;
        ExperimentRecord rec = execute_run(runs[index], plan, objective, *truth,
                                           fidelity_seed, options);
        {
          std::lock_guard<std::mutex> lock(mutex);
          slots[index] = std::move(rec);
        }
        done.notify_all();
      }
    };

    const int workers = std::min(options.parallelism, total - start_index);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);

    for (int index = start_index; index < total; ++index) {
      std::unique_lock<std::mutex> lock(mutex);
      done.wait(lock, [&] { return slots[index].has_value(); });
      ExperimentRecord rec = std::move(*slots[index]);
      slots[index].reset();
      lock.unlock();
      if (persist) {
        incremental << csv::join_row(record_to_row(rec)) << '\n';
        incremental.flush();
      }
      records.push_back(std::move(rec));
    }
    for (auto& t : pool) t.join();
  }
  if (persist) incremental.close();

  GridResult result;
  result.records = std::move(records);
  for (const auto& r : result.records) {
    if (r.failed()) ++result.failed_runs;
  }
  if (persist) {
    export_reports(plan, result.records, options.out_dir);
  }
  return result;
}

}  // namespace hrmsbo::harness
