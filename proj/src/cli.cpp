#include "badacost/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "badacost/booster.hpp"
#include "badacost/cascade.hpp"
#include "badacost/data_io.hpp"
#include "badacost/error.hpp"
#include "badacost/format.hpp"

namespace badacost::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string data;
  std::string label_col = "label";
  std::string cost = "zero-one";
  int rounds = 100;
  int depth = 4;
  double shrinkage = 1.0;
  double feature_fraction = 1.0;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string model;
  std::string out;
  bool pruned = false;
  std::string mode = "per-stage";
  std::string compare;
  double scale = 1.0;
  std::string trace;
  std::string eval_cost;
};

TrainParams train_params(const Config& cfg) {
  TrainParams p;
  p.rounds = cfg.rounds;
  p.depth = cfg.depth;
  p.shrinkage = cfg.shrinkage;
  p.feature_fraction = cfg.feature_fraction;
  p.seed = cfg.seed;
  return p;
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected,
                                  const std::string& what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError("bad number '" + item + "' in " + what);
    values.push_back(v);
  }
  if (values.size() != expected) {
    throw UsageError(what + " needs " + std::to_string(expected) + " comma-separated values");
  }
  return values;
}

/// Writes to the named file, or to `fallback` when the name is empty.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
  } else {
    write_file(path, text);
  }
}

void check_range(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void validate(const Config& cfg) {
  check_range(cfg.rounds >= 1, "--rounds must be >= 1");
  check_range(cfg.depth >= 1, "--depth must be >= 1");
  check_range(cfg.shrinkage > 0.0 && cfg.shrinkage <= 1.0, "--shrinkage must be in (0, 1]");
  check_range(cfg.feature_fraction > 0.0 && cfg.feature_fraction <= 1.0,
              "--feature-fraction must be in (0, 1]");
  check_range(cfg.folds >= 2, "--folds must be >= 2");
  check_range(cfg.scale > 0.0 && std::isfinite(cfg.scale), "--scale must be > 0");
}

CostMatrix resolve_cost(const CostSource& source, const Dataset& data, const TrainParams& params) {
  if (const auto* fixed = std::get_if<CostMatrix>(&source)) return *fixed;
  return derive_imbalance_cost(data, params);
}

int cmd_train(const Config& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const Dataset data = load_csv(cfg.data, cfg.label_col, std::nullopt, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const CostSource source = parse_cost_source(cfg.cost, data.k());
  const TrainParams params = train_params(cfg);
  const CostMatrix cost = resolve_cost(source, data, params);
  const TrainResult result = train(data, cost, params);
  if (result.ensemble.size() == 0) {
    throw Error(ErrorKind::empty_input, "no weak learner beat chance in round 1; nothing to save");
  }
  save_model(result.ensemble, std::nullopt, cfg.model);
  if (!cfg.out.empty()) write_file(cfg.out, report_csv(result.report));
  out << "trained " << result.ensemble.size() << " members on " << data.size() << " samples (K = "
      << data.k() << "), stop: " << to_string(result.report.stop) << '\n';
  return kOk;
}

/// Feature matrix of `table` in model column order, dropping the label column.
std::vector<std::vector<double>> model_inputs(const CsvTable& table, const Ensemble& e,
                                              const std::string& label_col) {
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] != label_col) columns.push_back(c);
  }
  std::vector<std::string> names;
  for (std::size_t c : columns) names.push_back(table.header[c]);
  if (names.size() != e.n_features() || (!e.feature_names().empty() && names != e.feature_names())) {
    std::ostringstream msg;
    msg << "input columns [";
    for (std::size_t i = 0; i < names.size(); ++i) msg << (i ? "," : "") << names[i];
    msg << "] do not match the model's " << e.n_features() << " features [";
    for (std::size_t i = 0; i < e.feature_names().size(); ++i) {
      msg << (i ? "," : "") << e.feature_names()[i];
    }
    msg << "]";
    throw Error(ErrorKind::dimension_mismatch, msg.str());
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    std::vector<double> x;
    x.reserve(columns.size());
    for (std::size_t c : columns) x.push_back(r[c]);
    rows.push_back(std::move(x));
  }
  return rows;
}

int cmd_predict(const Config& cfg, std::ostream& out) {
  const Model model = load_model(cfg.model);
  const Ensemble& e = model.ensemble;
  if (cfg.pruned && !model.thresholds) {
    throw UsageError("--pruned needs a calibrated model (run the calibrate subcommand first)");
  }
  const Label background = model.thresholds ? model.thresholds->background : 1;
  const auto rows = model_inputs(read_csv_table(cfg.data), e, cfg.label_col);

  std::ostringstream csv;
  std::ostringstream trace;
  csv << "row,label,score,members_evaluated\n";
  trace << "row,member,score\n";
  for (std::size_t n = 0; n < rows.size(); ++n) {
    Label label = 1;
    double score = 0.0;
    std::size_t evaluated = e.size();
    if (cfg.pruned) {
      const PrunedPrediction p = predict_pruned(e, *model.thresholds, rows[n]);
      label = p.label;
      score = p.score;
      evaluated = p.members_evaluated;
    } else {
      const auto f = e.margin_vector(rows[n]);
      label = min_cost_label(f, e.c_star());
      score = detection_score(f, e.c_star(), background);
    }
    csv << n + 1 << ',' << label << ',' << format_double(score) << ',' << evaluated << '\n';
    if (!cfg.trace.empty()) {
      const auto t = score_trace(e, rows[n], background);
      for (std::size_t m = 0; m < t.size(); ++m) {
        trace << n + 1 << ',' << m + 1 << ',' << format_double(t[m]) << '\n';
      }
    }
  }
  emit(cfg.out, csv.str(), out);
  if (!cfg.trace.empty()) write_file(cfg.trace, trace.str());
  return kOk;
}

void describe_cv(const std::string& method, const CvReport& r, double scale, std::ostream& text,
                 std::ostream& csv) {
  text << method << ": mean average cost " << format_double(r.mean * scale) << " +- "
       << format_double(r.std_dev * scale) << " over " << r.folds.size() << " folds\n";
  for (const FoldReport& f : r.folds) {
    csv << method << ',' << f.fold << ',' << format_double(f.average_cost * scale) << ','
        << f.members << '\n';
    text << "  fold " << f.fold << ": cost " << format_double(f.average_cost * scale)
         << ", members " << f.members << ", confusion";
    for (Label i = 1; i <= f.confusion.k(); ++i) {
      text << (i == 1 ? " [" : " | ");
      for (Label j = 1; j <= f.confusion.k(); ++j) text << (j > 1 ? " " : "") << f.confusion(i, j);
    }
    text << "]\n";
  }
  csv << method << ",mean," << format_double(r.mean * scale) << ",\n";
  csv << method << ",std," << format_double(r.std_dev * scale) << ",\n";
}

int cmd_eval(const Config& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.compare.empty() && cfg.compare != "samme") {
    throw UsageError("--compare only supports 'samme'");
  }
  std::vector<std::string> warnings;
  const Dataset data = load_csv(cfg.data, cfg.label_col, std::nullopt, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const CostSource source = parse_cost_source(cfg.cost, data.k());
  const TrainParams params = train_params(cfg);

  std::optional<CostMatrix> eval_cost;
  if (!cfg.eval_cost.empty()) {
    eval_cost = read_cost_csv(cfg.eval_cost);
  } else if (const auto* fixed = std::get_if<CostMatrix>(&source)) {
    eval_cost = *fixed;
  } else {
    eval_cost = make_01_cost(data.k());
  }
  if (eval_cost->k() != data.k()) {
    throw Error(ErrorKind::dimension_mismatch, "evaluation cost size differs from label count");
  }

  std::ostringstream csv;
  csv << "method,fold,average_cost,members\n";
  const CvReport main = cross_validate(data, source, cfg.folds, params, eval_cost);
  describe_cv("badacost", main, cfg.scale, err, csv);
  if (cfg.compare == "samme") {
    const int k = data.k();
    const CvReport baseline =
        cross_validate(data, make_01_cost(k, 1.0 / (k * (k - 1.0))), cfg.folds, params, eval_cost);
    describe_cv("samme", baseline, cfg.scale, err, csv);
  }
  emit(cfg.out, csv.str(), out);
  return kOk;
}

int cmd_calibrate(const Config& cfg, std::ostream& out) {
  Model model = load_model(cfg.model);
  const ThresholdMode mode = parse_threshold_mode(cfg.mode);
  const Dataset positives = load_csv(cfg.data, cfg.label_col, model.ensemble.k());
  if (positives.n_features() != model.ensemble.n_features()) {
    throw Error(ErrorKind::dimension_mismatch, "positives file has a different feature count");
  }
  const Calibration cal = calibrate(model.ensemble, positives, mode);
  save_model(model.ensemble, cal.thresholds, cfg.out.empty() ? cfg.model : cfg.out);
  out << "calibrated " << to_string(mode) << " thresholds on " << cal.retained
      << " positives (" << cal.excluded << " excluded)\n";
  if (!cfg.trace.empty()) {
    std::ostringstream trace;
    trace << "row,member,score\n";
    for (std::size_t n = 0; n < positives.size(); ++n) {
      const auto t = score_trace(model.ensemble, positives.row(n), cal.thresholds.background);
      for (std::size_t m = 0; m < t.size(); ++m) {
        trace << n + 1 << ',' << m + 1 << ',' << format_double(t[m]) << '\n';
      }
    }
    write_file(cfg.trace, trace.str());
  }
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_cost_matrix:
    case ErrorKind::dimension_mismatch:
    case ErrorKind::parse:
    case ErrorKind::class_too_small:
      return kUsageError;
    default:
      return kRuntimeError;
  }
}

}  // namespace

CostSource parse_cost_source(const std::string& text, int k) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "imbalance-auto" && arg.empty()) return ImbalanceAuto{};
  CostMatrix cost = [&]() -> CostMatrix {
    if (kind == "zero-one") {
      return make_01_cost(k, arg.empty() ? 1.0 : split_numbers(arg, 1, "zero-one scale")[0]);
    }
    if (kind == "samme" && arg.empty()) return make_01_cost(k, 1.0 / (k * (k - 1.0)));
    if (kind == "detection") return make_detection_cost(k - 1, split_numbers(arg, 1, "detection")[0]);
    if (kind == "circular") {
      const auto w = split_numbers(arg, 3, "circular");
      return make_circular_view_cost(k - 1, w[0], w[1], w[2]);
    }
    if (kind == "file" && !arg.empty()) return read_cost_csv(arg);
    throw UsageError("unknown --cost '" + text +
                     "' (expected zero-one[:S], samme, detection:B, circular:A,B,G, "
                     "imbalance-auto or file:PATH)");
  }();
  if (cost.k() != k) {
    throw Error(ErrorKind::dimension_mismatch, "cost matrix is " + std::to_string(cost.k()) + "x" +
                                                   std::to_string(cost.k()) + " but the data has K = " +
                                                   std::to_string(k));
  }
  return cost;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Multi-class cost-sensitive boosting (BAdaCost) over CSV data", "badacost"};
  app.require_subcommand(1);

  auto add_data = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--data", cfg.data, "input CSV with a header row")
                    ->check(CLI::ExistingFile);
    if (required) opt->required();
    sub->add_option("--label-col", cfg.label_col, "name of the label column")
        ->capture_default_str();
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--cost", cfg.cost,
                    "zero-one[:S] | samme | detection:B | circular:A,B,G | imbalance-auto | "
                    "file:PATH")
        ->capture_default_str();
    sub->add_option("--rounds", cfg.rounds, "boosting rounds")->capture_default_str();
    sub->add_option("--depth", cfg.depth, "tree depth limit")->capture_default_str();
    sub->add_option("--shrinkage", cfg.shrinkage, "multiplier on each beta, in (0, 1]")
        ->capture_default_str();
    sub->add_option("--feature-fraction", cfg.feature_fraction,
                    "fraction of features offered to each tree")
        ->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  };

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_data(train_cmd, true);
  add_training(train_cmd);
  train_cmd->add_option("--model", cfg.model, "output model file")->required();
  train_cmd->add_option("--out", cfg.out, "per-round report CSV");

  auto* predict_cmd = app.add_subcommand("predict", "label rows of a CSV");
  add_data(predict_cmd, true);
  predict_cmd->add_option("--model", cfg.model, "model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", cfg.out, "output CSV (default stdout)");
  predict_cmd->add_flag("--pruned", cfg.pruned, "early-exit evaluation with calibrated thresholds");
  predict_cmd->add_option("--trace", cfg.trace, "write per-member score traces to this CSV");

  auto* eval_cmd = app.add_subcommand("eval", "stratified cross-validation");
  add_data(eval_cmd, true);
  add_training(eval_cmd);
  eval_cmd->add_option("--folds", cfg.folds, "number of folds")->capture_default_str();
  eval_cmd->add_option("--out", cfg.out, "report CSV (default stdout)");
  eval_cmd->add_option("--compare", cfg.compare, "also run a baseline: samme");
  eval_cmd->add_option("--scale", cfg.scale, "multiply reported costs (presentation only)")
      ->capture_default_str();
  eval_cmd->add_option("--eval-cost", cfg.eval_cost, "cost matrix CSV used to score test folds")
      ->check(CLI::ExistingFile);

  auto* calibrate_cmd = app.add_subcommand("calibrate", "set cascade rejection thresholds");
  add_data(calibrate_cmd, true);
  calibrate_cmd->add_option("--model", cfg.model, "model file")->required()->check(CLI::ExistingFile);
  calibrate_cmd->add_option("--mode", cfg.mode, "per-stage | single")
      ->check(CLI::IsMember({"per-stage", "per_stage", "single"}))
      ->capture_default_str();
  calibrate_cmd->add_option("--out", cfg.out, "output model (default: overwrite --model)");
  calibrate_cmd->add_option("--trace", cfg.trace, "write positives' score traces to this CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    validate(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg, out, err);
    if (predict_cmd->parsed()) return cmd_predict(cfg, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out, err);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace badacost::cli
