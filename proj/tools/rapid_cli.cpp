// Copyright 2026 The RAPID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: assess, curve, cv, permtest, simulate, sweep,
// synthesize and attribute. Reports are JSON and byte-identical across
// reruns with the same inputs and seed, except for the "timing" object.

#include <openssl/evp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "rapid/rapid.hpp"

#ifndef RAPID_VERSION
#define RAPID_VERSION "0.0.0"
#endif

namespace rapid::cli {
namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitFoldFailure = 4;

// A usage problem detected after parsing.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidK:
    case ErrorCode::kTooFewReplicates:
    case ErrorCode::kTooFewPermutations:
    case ErrorCode::kEmptyGrid:
    case ErrorCode::kNegativeKappa:
    case ErrorCode::kMissingBinSpec:
    case ErrorCode::kMixedConfigurations:
      return kExitConfig;
    default:
      return kExitData;
  }
}

// ---------------------------------------------------------------------------
// Shared plumbing

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

struct CommonOptions {
  std::uint64_t seed = 0;
  int threads = -1;
  std::string report;
  std::string schema;
};

void AddCommon(CLI::App* sub, CommonOptions& common, bool with_schema = true) {
  sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", common.threads,
                  "Worker threads (default: RAPID_THREADS, else all cores)");
  sub->add_option("--report", common.report, "JSON report path (default: stdout)");
  if (with_schema) sub->add_option("--schema", common.schema, "Schema JSON applied to input CSVs");
}

void ApplyThreads(const CommonOptions& common) {
  if (common.threads >= 0) {
    SetThreadCount(static_cast<unsigned>(common.threads));
    return;
  }
  if (const char* env = std::getenv("RAPID_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) throw ConfigError("RAPID_THREADS must be an integer >= 0");
    SetThreadCount(static_cast<unsigned>(v));
  }
}

// Loads CSV inputs and remembers their digests for the report.
class Inputs {
 public:
  explicit Inputs(const std::string& schema_path) {
    if (!schema_path.empty()) {
      schema_ = LoadSchema(schema_path);
      const std::string text = ReadFile(schema_path);
      schema_digest_ = json{{"path", schema_path}, {"sha256", Sha256Hex(text)}};
    }
  }

  Dataset Load(const std::string& role, const std::string& path) {
    const std::string text = ReadFile(path);
    Dataset d = ParseCsv(text, schema_);
    digests_[role].push_back(
        json{{"path", path}, {"sha256", Sha256Hex(text)}, {"rows", d.num_rows()}});
    return d;
  }

  void Note(const std::string& role, const std::string& path) {
    digests_[role].push_back(json{{"path", path}, {"sha256", Sha256Hex(ReadFile(path))}});
  }

  const std::optional<Schema>& schema() const { return schema_; }

  json ToJson() const {
    json j = json::object();
    for (const auto& [role, list] : digests_) j[role] = list;
    if (!schema_digest_.is_null()) j["schema"] = schema_digest_;
    return j;
  }

 private:
  std::optional<Schema> schema_;
  json schema_digest_;
  std::map<std::string, std::vector<json>> digests_;
};

class Report {
 public:
  explicit Report(std::string command)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  json& config() { return config_; }
  json& results() { return results_; }

  void Write(const std::string& path, const Inputs& inputs) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json doc = {{"tool", "rapid"},
                {"version", RAPID_VERSION},
                {"command", command_},
                {"inputs", inputs.ToJson()},
                {"config", config_},
                {"results", results_},
                {"timing", {{"wall_seconds", seconds}, {"threads", ThreadCount()}}}};
    const std::string text = doc.dump(2) + "\n";
    if (path.empty() || path == "-") {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write report '" + path + "'");
    out << text;
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json config_ = json::object();
  json results_ = json::object();
};

// Writes to a file, or stdout for "" / "-".
void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
}

json IntervalJson(const IntervalEstimate& e) { return e.ToJson(); }

std::map<std::string, std::string> ParsePairs(const std::vector<std::string>& items,
                                              const std::string& flag) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(flag + " expects name=value, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double ParseNumber(const std::string& text, const std::string& what) {
  const auto v = csv::ParseReal(text);
  if (!v) throw ConfigError(what + ": '" + text + "' is not a number");
  return *v;
}

std::vector<double> ParseNumberList(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseNumber(item, what));
  return out;
}

// ---------------------------------------------------------------------------
// Attacker and threshold options

struct AttackerOptions {
  std::vector<std::string> families = {"rf"};
  std::size_t trees = 500;
  double lambda = 0.01;

  void Add(CLI::App* sub, bool multiple) {
    if (multiple) {
      sub->add_option("--attacker", families, "Attacker family: rf, cart, logistic (repeatable)")
          ->capture_default_str();
    } else {
      sub->add_option("--attacker", families, "Attacker family: rf, cart, logistic")
          ->expected(1)
          ->capture_default_str();
    }
    sub->add_option("--trees", trees, "Forest size")->capture_default_str();
    sub->add_option("--lambda", lambda, "L1 penalty of the logistic attacker")->capture_default_str();
  }

  AttackerSpec Spec(std::size_t index, std::uint64_t seed) const {
    AttackerSpec spec = AttackerSpec::Of(ParseFamily(families.at(index)), seed);
    spec.forest.num_trees = trees;
    spec.logistic.lambda = lambda;
    return spec;
  }

  void Validate() const {
    if (families.empty()) throw ConfigError("at least one --attacker is required");
    for (const auto& f : families) ParseFamily(f);
    if (trees < 1) throw ConfigError("--trees must be >= 1");
  }
};

struct ThresholdOptions {
  double tau = kDefaultTau;
  double epsilon = kDefaultEpsilon;
  std::string metric = "symmetric";
  double delta = kDefaultDelta;

  void Add(CLI::App* sub) {
    sub->add_option("--tau", tau, "Normalized-gain threshold (categorical)")->capture_default_str();
    sub->add_option("--epsilon", epsilon, "Error tolerance (continuous)")->capture_default_str();
    sub->add_option("--metric", metric, "Error metric: symmetric, stabilised, absolute")
        ->capture_default_str();
    sub->add_option("--delta", delta, "Denominator smoothing of relative errors")
        ->capture_default_str();
  }

  void Into(AssessOptions& options) const {
    options.tau = tau;
    options.epsilon = epsilon;
    options.metric = ErrorMetric::Parse(metric, delta);
    options.metric.Validate();
  }

  json ToJson(bool categorical) const {
    if (categorical) return {{"tau", tau}};
    return {{"epsilon", epsilon}, {"metric", ErrorMetric::Parse(metric, delta).Name()},
            {"delta", delta}};
  }
};

std::vector<std::size_t> ReadRowIds(const std::string& path, std::size_t n_rows) {
  std::vector<std::size_t> rows;
  std::stringstream ss(ReadFile(path));
  std::string line;
  bool first = true;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto v = csv::ParseReal(line);
    if (!v) {
      if (first) {  // header line
        first = false;
        continue;
      }
      throw Error(ErrorCode::kMalformedCsv, "holdout id '" + line + "' is not a row index");
    }
    first = false;
    if (*v < 0 || *v != std::floor(*v) || *v >= static_cast<double>(n_rows)) {
      throw Error(ErrorCode::kInvalidArgument, "holdout id " + line + " is not a valid row");
    }
    rows.push_back(static_cast<std::size_t>(*v));
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

// ---------------------------------------------------------------------------
// Result serialization

json ResultJson(const RapidResult& r, std::size_t boot, double level, std::uint64_t boot_seed,
                const Dataset* original, const std::string& sensitive) {
  json j = {{"score", r.score},
            {"n_at_risk", r.n_at_risk},
            {"n_evaluated", r.n_evaluated},
            {"n_excluded_missing", r.n_excluded_missing},
            {"target_kind", r.categorical ? "categorical" : "continuous"},
            {"mode", ModeName(r.mode)},
            {"attacker", r.attacker}};
  if (r.categorical) {
    j["tau"] = r.tau;
    j["accuracy"] = r.accuracy;
    j["baseline_source"] = r.baseline_source;
  } else {
    j["epsilon"] = r.epsilon;
    j["metric"] = r.metric ? r.metric->Name() : "symmetric";
    j["mae"] = r.mae;
  }
  json intervals = json::object();
  if (r.n_evaluated > 0) {
    intervals["wilson"] = IntervalJson(WilsonInterval(r.n_at_risk, r.n_evaluated, level));
    intervals["clopper_pearson"] =
        IntervalJson(ClopperPearsonInterval(r.n_at_risk, r.n_evaluated, level));
    if (boot > 0) intervals["bootstrap"] = IntervalJson(BootstrapCi(r.Flags(), boot, level, boot_seed));
  }
  j["intervals"] = intervals;
  if (r.categorical && r.n_evaluated > 0) {
    // Per-class rates, keyed by the true class.
    std::vector<std::size_t> n(r.levels.size(), 0), k(r.levels.size(), 0);
    for (const auto& rec : r.categorical_records) {
      ++n[rec.true_class];
      k[rec.true_class] += rec.at_risk;
    }
    json per_class = json::array();
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
      if (n[l] == 0) continue;
      per_class.push_back({{"class", r.levels[l]},
                           {"n", n[l]},
                           {"n_at_risk", k[l]},
                           {"rate", static_cast<double>(k[l]) / static_cast<double>(n[l])}});
    }
    j["per_class"] = per_class;
  }
  (void)original;
  (void)sensitive;
  return j;
}

void AppendRecords(const RapidResult& r, std::size_t replicate, std::ostream& out) {
  auto label = [&](int code) {
    return code >= 0 && static_cast<std::size_t>(code) < r.levels.size() ? r.levels[code]
                                                                         : std::string();
  };
  if (r.categorical) {
    for (const auto& rec : r.categorical_records) {
      csv::WriteRecord(out, {std::to_string(replicate), r.attacker, std::to_string(rec.row),
                             label(rec.true_class), label(rec.predicted_class),
                             csv::FormatReal(rec.g), csv::FormatReal(rec.b), csv::FormatReal(rec.r),
                             rec.at_risk ? "1" : "0"});
    }
  } else {
    for (const auto& rec : r.continuous_records) {
      csv::WriteRecord(out, {std::to_string(replicate), r.attacker, std::to_string(rec.row),
                             csv::FormatReal(rec.y), csv::FormatReal(rec.prediction),
                             csv::FormatReal(rec.e), rec.at_risk ? "1" : "0"});
    }
  }
}

const csv::Record kCategoricalRecordHeader = {"replicate", "attacker", "row", "true", "predicted",
                                              "g", "b", "r", "at_risk"};
const csv::Record kContinuousRecordHeader = {"replicate", "attacker", "row", "true",
                                             "prediction", "e", "at_risk"};

// ---------------------------------------------------------------------------
// Data options shared by assess, curve and permtest

struct DataOptions {
  std::string original;
  std::vector<std::string> released;
  std::vector<std::string> qi;
  std::string sensitive;
  std::string mode = "all";
  std::string holdout_ids;
  std::string baseline_policy = "original";

  void Add(CLI::App* sub, bool replicates) {
    sub->add_option("--original", original, "Original data CSV");
    auto* rel = sub->add_option("--released", released,
                                replicates ? "Released data CSV (repeatable for replicates)"
                                           : "Released data CSV");
    if (!replicates) rel->expected(1);
    sub->add_option("--qi", qi, "Quasi-identifiers, comma separated")->delimiter(',');
    sub->add_option("--sensitive", sensitive, "Sensitive attribute")->required();
    sub->add_option("--mode", mode, "Evaluation mode: all or holdout")->capture_default_str();
    sub->add_option("--holdout-ids", holdout_ids, "File of 0-based original row indices to score");
    sub->add_option("--baseline-policy", baseline_policy,
                    "Baseline marginals: original (all records) or target (scored records)")
        ->capture_default_str();
  }

  void ValidateForTraining() const {
    if (original.empty()) throw ConfigError("--original is required");
    if (released.empty()) throw ConfigError("at least one --released is required");
    if (qi.empty()) throw ConfigError("--qi is required");
    if (mode != "all" && mode != "holdout") throw ConfigError("--mode must be all or holdout");
    if (mode == "holdout" && holdout_ids.empty()) {
      throw ConfigError("--mode holdout needs --holdout-ids");
    }
    if (mode == "all" && !holdout_ids.empty()) {
      throw ConfigError("--holdout-ids requires --mode holdout");
    }
    if (baseline_policy != "original" && baseline_policy != "target") {
      throw ConfigError("--baseline-policy must be original or target");
    }
  }

  void Into(AssessOptions& options, const Dataset& orig) const {
    options.mode = mode == "holdout" ? EvaluationMode::kHoldout : EvaluationMode::kAllRecords;
    if (options.mode == EvaluationMode::kHoldout) {
      options.target_rows = ReadRowIds(holdout_ids, orig.num_rows());
    }
    options.baseline_policy =
        baseline_policy == "target" ? BaselinePolicy::kTargetSet : BaselinePolicy::kAllOriginal;
  }

  json ToJson() const {
    return {{"qi", qi},
            {"sensitive", sensitive},
            {"mode", mode},
            {"baseline_policy", baseline_policy},
            {"n_released", released.size()}};
  }
};

// Precomputed attacker outputs: a probability CSV (column "true" plus one
// column per class) or a prediction CSV (columns "true" and "prediction").
RapidResult ScorePrecomputed(const std::string& probs_in, const std::string& preds_in,
                             const std::vector<std::string>& baseline_items,
                             const std::optional<Dataset>& original, const std::string& sensitive,
                             const ThresholdOptions& thresholds, Inputs& inputs) {
  if (!probs_in.empty()) {
    const std::string text = ReadFile(probs_in);
    inputs.Note("probabilities", probs_in);
    const auto rows = csv::Parse(text);
    if (rows.size() < 2) throw Error(ErrorCode::kEmptyFile, "probability file has no records");
    const auto& header = rows[0];
    std::optional<std::size_t> true_col, row_col;
    std::vector<std::size_t> class_cols;
    std::vector<std::string> levels;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "true") {
        true_col = c;
      } else if (header[c] == "row") {
        row_col = c;
      } else {
        class_cols.push_back(c);
        levels.push_back(header[c]);
      }
    }
    if (!true_col || levels.size() < 2) {
      throw Error(ErrorCode::kMalformedCsv,
                  "probability file needs a 'true' column and at least two class columns");
    }
    const std::size_t n = rows.size() - 1;
    ProbabilityMatrix probs(n, levels.size());
    std::vector<int> truth(n);
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = rows[i + 1];
      if (row.size() != header.size()) throw Error(ErrorCode::kMalformedCsv, "ragged probability row");
      const auto it = std::find(levels.begin(), levels.end(), row[*true_col]);
      if (it == levels.end()) {
        throw Error(ErrorCode::kClassNotInBaseline, "true class '" + row[*true_col] +
                                                        "' has no probability column");
      }
      truth[i] = static_cast<int>(it - levels.begin());
      for (std::size_t k = 0; k < class_cols.size(); ++k) {
        const auto v = csv::ParseReal(row[class_cols[k]]);
        if (!v || *v < 0.0 || *v > 1.0) {
          throw Error(ErrorCode::kMalformedCsv, "probabilities must be numbers in [0, 1]");
        }
        probs(i, k) = *v;
      }
      if (row_col) {
        const auto v = csv::ParseReal(row[*row_col]);
        if (!v || *v < 0) throw Error(ErrorCode::kMalformedCsv, "row ids must be integers >= 0");
        ids.push_back(static_cast<std::size_t>(*v));
      }
    }
    Baselines baselines{levels, std::vector<double>(levels.size(), 0.0)};
    std::string source;
    if (!baseline_items.empty()) {
      for (const auto& [name, value] : ParsePairs(baseline_items, "--baselines")) {
        const auto it = std::find(levels.begin(), levels.end(), name);
        if (it == levels.end()) throw ConfigError("--baselines names unknown class '" + name + "'");
        baselines.proportion[it - levels.begin()] = ParseNumber(value, "--baselines");
      }
      source = "explicit";
    } else if (original) {
      const Baselines from = BaselineMarginals(original->column(sensitive));
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto it = std::find(from.levels.begin(), from.levels.end(), levels[l]);
        if (it != from.levels.end()) baselines.proportion[l] = from.proportion[it - from.levels.begin()];
      }
      source = "original";
    } else {
      for (int t : truth) baselines.proportion[t] += 1.0 / static_cast<double>(n);
      source = "target_set";
    }
    RapidResult r = RapidCategorical(probs, truth, baselines, thresholds.tau, ids);
    r.baseline_source = source;
    return r;
  }
  const std::string text = ReadFile(preds_in);
  inputs.Note("predictions", preds_in);
  const Dataset d = ParseCsv(text);
  if (!d.HasColumn("true") || !d.HasColumn("prediction")) {
    throw Error(ErrorCode::kMalformedCsv, "prediction file needs 'true' and 'prediction' columns");
  }
  const Column& y = d.column("true");
  const Column& p = d.column("prediction");
  if (y.is_categorical() || p.is_categorical()) {
    throw Error(ErrorCode::kIncompatibleKinds, "prediction file must be numeric");
  }
  std::vector<double> truth, pred;
  std::vector<std::size_t> ids;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    if (y.is_missing(i) || p.is_missing(i)) {
      ++excluded;
      continue;
    }
    truth.push_back(y.values[i]);
    pred.push_back(p.values[i]);
    ids.push_back(i);
  }
  RapidResult r = RapidContinuous(pred, truth, thresholds.epsilon,
                                  ErrorMetric::Parse(thresholds.metric, thresholds.delta), ids);
  r.n_excluded_missing = excluded;
  return r;
}

// Runs every (attacker, replicate) pair. results[a][r].
std::vector<std::vector<RapidResult>> RunAssessments(const DataOptions& data,
                                                     const AttackerOptions& attackers,
                                                     const ThresholdOptions& thresholds,
                                                     std::uint64_t seed, Inputs& inputs,
                                                     Dataset* original_out) {
  const Dataset original = inputs.Load("original", data.original);
  std::vector<Dataset> released;
  for (const auto& path : data.released) released.push_back(inputs.Load("released", path));
  AssessOptions options;
  thresholds.Into(options);
  data.Into(options, original);
  std::vector<std::vector<RapidResult>> results(attackers.families.size());
  for (std::size_t a = 0; a < attackers.families.size(); ++a) {
    for (std::size_t r = 0; r < released.size(); ++r) {
      const AttackerSpec spec = attackers.Spec(a, DeriveSeed(seed, 2, r));
      results[a].push_back(RapidAssess(original, released[r], data.qi, data.sensitive, spec, options));
    }
  }
  if (original_out) *original_out = original;
  return results;
}

// ---------------------------------------------------------------------------
// assess

struct AssessCommand {
  CommonOptions common;
  DataOptions data;
  AttackerOptions attackers;
  ThresholdOptions thresholds;
  std::size_t boot = kDefaultBootstrapReplicates;
  double level = 0.95;
  std::string records_out;
  std::string probs_in;
  std::string preds_in;
  std::vector<std::string> baselines;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("assess", "Score attribute-inference risk of a release");
    AddCommon(sub, common);
    data.Add(sub, true);
    attackers.Add(sub, true);
    thresholds.Add(sub);
    sub->add_option("--boot", boot, "Bootstrap replicates (0 disables)")->capture_default_str();
    sub->add_option("--level", level, "Interval confidence level")->capture_default_str();
    sub->add_option("--records-out", records_out, "Per-record risk CSV");
    sub->add_option("--probs-in", probs_in, "Precomputed class probabilities CSV");
    sub->add_option("--preds-in", preds_in, "Precomputed continuous predictions CSV");
    sub->add_option("--baselines", baselines, "Class baselines for --probs-in, class=share")
        ->delimiter(',');
    sub->callback([this] { code = Run(); });
  }

  int code = kExitOk;

  int Run() {
    ApplyThreads(common);
    if (boot > 0 && boot < kMinBootstrapReplicates) {
      throw ConfigError("--boot must be 0 or at least " + std::to_string(kMinBootstrapReplicates));
    }
    Inputs inputs(common.schema);
    Report report("assess");
    std::vector<std::vector<RapidResult>> results;
    const bool precomputed = !probs_in.empty() || !preds_in.empty();
    if (precomputed) {
      if (!probs_in.empty() && !preds_in.empty()) {
        throw ConfigError("--probs-in and --preds-in are mutually exclusive");
      }
      if (!data.released.empty()) throw ConfigError("--released cannot be combined with --probs-in");
      std::optional<Dataset> original;
      if (!data.original.empty()) original = inputs.Load("original", data.original);
      results.push_back({ScorePrecomputed(probs_in, preds_in, baselines, original, data.sensitive,
                                          thresholds, inputs)});
    } else {
      data.ValidateForTraining();
      attackers.Validate();
      results = RunAssessments(data, attackers, thresholds, common.seed, inputs, nullptr);
    }

    const bool categorical = results[0][0].categorical;
    json& config = report.config();
    config = data.ToJson();
    config.update(thresholds.ToJson(categorical));
    config["seed"] = common.seed;
    config["bootstrap_replicates"] = boot;
    config["level"] = level;
    config["precomputed"] = precomputed;
    json specs = json::array();
    if (!precomputed) {
      for (std::size_t a = 0; a < attackers.families.size(); ++a) {
        specs.push_back(results[a][0].attacker_spec);
      }
    }
    config["attackers"] = specs;

    json per_attacker = json::array();
    std::size_t index = 0;
    for (const auto& list : results) {
      json reps = json::array();
      std::vector<double> scores;
      for (std::size_t r = 0; r < list.size(); ++r) {
        json j = ResultJson(list[r], boot, level, DeriveSeed(common.seed, 3, index++), nullptr,
                            data.sensitive);
        j["replicate"] = r + 1;
        reps.push_back(j);
        scores.push_back(list[r].score);
      }
      per_attacker.push_back({{"attacker", list[0].attacker},
                              {"mean_score", Mean(scores)},
                              {"min_score", *std::min_element(scores.begin(), scores.end())},
                              {"max_score", *std::max_element(scores.begin(), scores.end())},
                              {"replicates", reps}});
    }
    json& res = report.results();
    res["score"] = per_attacker[0]["mean_score"];
    res["attackers"] = per_attacker;
    if (results.size() > 1) {
      json envelope = json::array();
      std::vector<double> means, maxes;
      for (std::size_t r = 0; r < results[0].size(); ++r) {
        std::vector<RapidResult> suite;
        for (const auto& list : results) suite.push_back(list[r]);
        const MultiModelSummary s = AggregateMultiModel(suite);
        envelope.push_back({{"replicate", r + 1},
                            {"mean_score", s.mean_score},
                            {"max_score", s.max_score},
                            {"max_attacker", s.max_attacker}});
        means.push_back(s.mean_score);
        maxes.push_back(s.max_score);
      }
      res["envelope"] = {{"mean_score", Mean(means)}, {"max_score", Mean(maxes)},
                         {"replicates", envelope}};
    }
    if (!records_out.empty()) {
      std::ostringstream out;
      csv::WriteRecord(out, categorical ? kCategoricalRecordHeader : kContinuousRecordHeader);
      for (const auto& list : results) {
        for (std::size_t r = 0; r < list.size(); ++r) AppendRecords(list[r], r + 1, out);
      }
      WriteText(records_out, out.str());
      res["records_csv"] = {{"path", records_out}, {"sha256", Sha256Hex(out.str())}};
    }
    report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// curve

struct CurveCommand {
  CommonOptions common;
  DataOptions data;
  AttackerOptions attackers;
  ThresholdOptions thresholds;
  std::string grid;
  std::string out;
  std::string probs_in;
  std::string preds_in;
  std::vector<std::string> baselines;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("curve", "Risk across a threshold grid");
    AddCommon(sub, common);
    data.Add(sub, true);
    attackers.Add(sub, false);
    thresholds.Add(sub);
    sub->add_option("--grid", grid,
                    "start:stop:step (default 0.05:0.95:0.05 for tau, 0.01:0.30:0.01 for epsilon)");
    sub->add_option("--out", out, "Curve CSV path (default: stdout)");
    sub->add_option("--probs-in", probs_in, "Precomputed class probabilities CSV");
    sub->add_option("--preds-in", preds_in, "Precomputed continuous predictions CSV");
    sub->add_option("--baselines", baselines, "Class baselines for --probs-in")->delimiter(',');
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    ApplyThreads(common);
    Inputs inputs(common.schema);
    Report report("curve");
    std::vector<RapidResult> results;
    if (!probs_in.empty() || !preds_in.empty()) {
      std::optional<Dataset> original;
      if (!data.original.empty()) original = inputs.Load("original", data.original);
      results.push_back(
          ScorePrecomputed(probs_in, preds_in, baselines, original, data.sensitive, thresholds, inputs));
    } else {
      data.ValidateForTraining();
      attackers.Validate();
      results = RunAssessments(data, attackers, thresholds, common.seed, inputs, nullptr)[0];
    }
    const bool categorical = results[0].categorical;
    const std::vector<double> points =
        grid.empty() ? (categorical ? DefaultTauGrid() : MakeGrid(0.01, 0.30, 0.01)) : ParseGrid(grid);
    const ThresholdCurve curve = MakeThresholdCurve(results, points);
    std::ostringstream csv_text;
    WriteCurveCsv(curve, csv_text);
    WriteText(out, csv_text.str());

    json& config = report.config();
    config = data.ToJson();
    config.update(thresholds.ToJson(categorical));
    config["grid"] = points;
    config["seed"] = common.seed;
    config["attacker"] = results[0].attacker_spec;
    json& res = report.results();
    res["kind"] = categorical ? "tau" : "epsilon";
    res["threshold"] = curve.grid;
    res["scores"] = curve.scores;
    if (curve.replicate_scores.size() > 1) res["replicate_scores"] = curve.replicate_scores;
    res["curve_csv_sha256"] = Sha256Hex(csv_text.str());
    if (!common.report.empty() || !out.empty()) report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// cv

// Runs a user command that reads training CSV on stdin and writes synthetic
// CSV on stdout. The seed is exported as RAPID_SEED.
class ExternalSynthesizer {
 public:
  ExternalSynthesizer(std::string command, int timeout_seconds)
      : command_(std::move(command)), timeout_(timeout_seconds) {
    char pattern[] = "/tmp/rapid-synth-XXXXXX";
    if (mkdtemp(pattern) == nullptr) throw Error(ErrorCode::kIo, "cannot create a temp directory");
    dir_ = pattern;
  }
  ~ExternalSynthesizer() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }

  Dataset operator()(const Dataset& training, std::uint64_t seed) const {
    const std::string tag = std::to_string(seed);
    const std::string in = dir_ + "/in-" + tag + ".csv";
    const std::string out = dir_ + "/out-" + tag + ".csv";
    WriteCsvFile(training, in);
    std::string quoted = "'";
    for (char c : command_) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
    quoted += "'";
    const std::string shell = "RAPID_SEED=" + tag + " timeout " + std::to_string(timeout_) +
                              " sh -c " + quoted + " < '" + in + "' > '" + out + "'";
    const int status = std::system(shell.c_str());
    if (status == -1 || !WIFEXITED(status)) {
      throw Error(ErrorCode::kSynthesizerFailure, "external synthesizer could not run");
    }
    const int exit_code = WEXITSTATUS(status);
    if (exit_code == 124) {
      throw Error(ErrorCode::kSynthesizerFailure,
                  "external synthesizer timed out after " + std::to_string(timeout_) + " s");
    }
    if (exit_code != 0) {
      throw Error(ErrorCode::kSynthesizerFailure,
                  "external synthesizer exited with status " + std::to_string(exit_code));
    }
    try {
      return ParseCsv(ReadFile(out), training.schema());
    } catch (const Error& e) {
      throw Error(ErrorCode::kSynthesizerFailure, std::string("external synthesizer output: ") + e.what());
    }
  }

 private:
  std::string command_;
  int timeout_;
  std::string dir_;
};

struct SynthesisOptions {
  std::size_t min_leaf = 5;
  std::size_t min_split = 15;
  double complexity = 1e-8;
  int max_depth = 30;
  std::vector<std::string> visit_order;

  void Add(CLI::App* sub) {
    sub->add_option("--minbucket", min_leaf, "Synthesizer minimum leaf size")->capture_default_str();
    sub->add_option("--minsplit", min_split, "Synthesizer minimum split size")->capture_default_str();
    sub->add_option("--cp", complexity, "Synthesizer complexity parameter")->capture_default_str();
    sub->add_option("--maxdepth", max_depth, "Synthesizer maximum depth")->capture_default_str();
    sub->add_option("--visit-order", visit_order, "Column visit order, comma separated")
        ->delimiter(',');
  }

  SynthesisPlan Plan() const {
    SynthesisPlan plan;
    plan.cart.min_leaf = min_leaf;
    plan.cart.min_split = min_split;
    plan.cart.complexity = complexity;
    plan.cart.max_depth = max_depth;
    plan.visit_order = visit_order;
    return plan;
  }
};

struct CvCommand {
  CommonOptions common;
  std::string original;
  std::vector<std::string> qi;
  std::string sensitive;
  std::size_t k = 5;
  std::string synth = "internal-cart";
  std::string synth_cmd;
  int synth_timeout = 600;
  AttackerOptions attackers;
  ThresholdOptions thresholds;
  SynthesisOptions synthesis;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("cv", "k-fold cross-validation of a synthesizer");
    AddCommon(sub, common);
    sub->add_option("--original", original, "Original data CSV")->required();
    sub->add_option("--qi", qi, "Quasi-identifiers, comma separated")->delimiter(',')->required();
    sub->add_option("--sensitive", sensitive, "Sensitive attribute")->required();
    sub->add_option("--k", k, "Number of folds")->capture_default_str();
    sub->add_option("--synth", synth, "Synthesizer: internal-cart")->capture_default_str();
    sub->add_option("--synth-cmd", synth_cmd,
                    "External synthesizer command (CSV on stdin, CSV on stdout)");
    sub->add_option("--synth-timeout", synth_timeout, "External synthesizer timeout in seconds")
        ->capture_default_str();
    attackers.Add(sub, false);
    thresholds.Add(sub);
    synthesis.Add(sub);
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    ApplyThreads(common);
    attackers.Validate();
    if (synth_cmd.empty() && synth != "internal-cart") {
      throw ConfigError("--synth must be internal-cart (or use --synth-cmd)");
    }
    if (synth_timeout < 1) throw ConfigError("--synth-timeout must be >= 1");
    Inputs inputs(common.schema);
    Report report("cv");
    const Dataset data = inputs.Load("original", original);
    CvOptions options;
    options.k = k;
    options.seed = common.seed;
    thresholds.Into(options.assess);
    const AttackerSpec spec = attackers.Spec(0, DeriveSeed(common.seed, 2));
    std::optional<ExternalSynthesizer> external;
    SynthesizerFn fn;
    if (!synth_cmd.empty()) {
      external.emplace(synth_cmd, synth_timeout);
      fn = [&external](const Dataset& d, std::uint64_t s) { return (*external)(d, s); };
    } else {
      fn = CartSynthesizer(synthesis.Plan());
    }
    const CvResult cv = RapidSynthesizerCv(data, fn, qi, sensitive, spec, options);

    json& config = report.config();
    config = {{"qi", qi}, {"sensitive", sensitive}, {"k", k}, {"seed", common.seed}};
    config.update(thresholds.ToJson(cv.categorical));
    config["attacker"] = spec.ToJson();
    if (synth_cmd.empty()) {
      SynthesisPlan plan = synthesis.Plan();
      plan.m = 1;
      config["synthesizer"] = {{"kind", "internal-cart"}, {"plan", plan.ToJson()}};
    } else {
      config["synthesizer"] = {{"kind", "external"}, {"command", synth_cmd},
                               {"timeout_seconds", synth_timeout}};
    }
    report.results() = cv.ToJson();
    report.results()["score"] = cv.mean;
    report.Write(common.report, inputs);
    if (!cv.ok()) {
      std::cerr << "rapid cv: synthesizer failed on fold(s)";
      for (std::size_t f : cv.failed_folds) std::cerr << ' ' << f + 1 << " (" << cv.folds[f].error << ")";
      std::cerr << '\n';
      return kExitFoldFailure;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// permtest

struct PermtestCommand {
  CommonOptions common;
  DataOptions data;
  AttackerOptions attackers;
  std::size_t n_perm = kDefaultPermutations;
  double quantile = 0.95;
  std::string grid;
  std::string target = "released";
  std::string out;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("permtest", "Permutation-null threshold selection");
    AddCommon(sub, common);
    data.Add(sub, false);
    attackers.Add(sub, false);
    sub->add_option("--n-perm", n_perm, "Number of permutations")->capture_default_str();
    sub->add_option("--quantile", quantile, "Null quantile to exceed")->capture_default_str();
    sub->add_option("--grid", grid, "Tau grid start:stop:step (default 0.05:0.95:0.05)");
    sub->add_option("--target", target, "Column to permute: released or original")
        ->capture_default_str();
    sub->add_option("--out", out, "CSV of observed and null quantile per threshold");
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    ApplyThreads(common);
    data.ValidateForTraining();
    attackers.Validate();
    if (target != "released" && target != "original") {
      throw ConfigError("--target must be released or original");
    }
    Inputs inputs(common.schema);
    Report report("permtest");
    const Dataset original = inputs.Load("original", data.original);
    const Dataset released = inputs.Load("released", data.released[0]);
    PermutationOptions options;
    options.n_perm = n_perm;
    options.quantile = quantile;
    options.seed = common.seed;
    options.grid = grid.empty() ? DefaultTauGrid() : ParseGrid(grid);
    options.target = target == "released" ? PermutationTarget::kReleased : PermutationTarget::kOriginal;
    data.Into(options.assess, original);
    const AttackerSpec spec = attackers.Spec(0, DeriveSeed(common.seed, 2));
    const PermutationNullResult null =
        PermutationNullThreshold(original, released, data.qi, data.sensitive, spec, options);

    std::ostringstream csv_text;
    csv::WriteRecord(csv_text, {"threshold", "observed", "null_mean", "null_quantile"});
    json rows = json::array();
    for (std::size_t t = 0; t < null.grid.size(); ++t) {
      const double mean = Mean(null.NullAt(t));
      csv::WriteRecord(csv_text, {csv::FormatReal(null.grid[t]), csv::FormatReal(null.observed[t]),
                                  csv::FormatReal(mean), csv::FormatReal(null.null_quantile[t])});
      rows.push_back({{"threshold", null.grid[t]},
                      {"observed", null.observed[t]},
                      {"null_mean", mean},
                      {"null_quantile", null.null_quantile[t]}});
    }
    if (!out.empty()) WriteText(out, csv_text.str());

    json& config = report.config();
    config = data.ToJson();
    config["n_perm"] = n_perm;
    config["quantile"] = quantile;
    config["grid"] = options.grid;
    config["permuted"] = target;
    config["seed"] = common.seed;
    config["attacker"] = spec.ToJson();
    json& res = report.results();
    res["selected_threshold"] =
        null.selected_threshold ? json(*null.selected_threshold) : json(nullptr);
    res["score"] = null.observed_result.score;
    res["curve"] = rows;
    report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateCommand {
  CommonOptions common;
  double kappa = 1.0;
  std::size_t n = 1000;
  std::string out;
  std::string schema_out;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("simulate", "Generate a simulated population");
    AddCommon(sub, common, false);
    sub->add_option("--kappa", kappa, "Dependency strength (>= 0)")->capture_default_str();
    sub->add_option("--n", n, "Number of records")->capture_default_str();
    sub->add_option("--out", out, "CSV path (default: stdout)");
    sub->add_option("--schema-out", schema_out, "Write the column schema as JSON");
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    if (n < 2) throw ConfigError("--n must be >= 2");
    SimConfig config;
    config.kappa = kappa;
    config.n = n;
    config.seed = common.seed;
    const Dataset d = GenerateSimulation(config);
    const std::string text = ToCsvString(d);
    WriteText(out, text);
    Inputs inputs("");
    Report report("simulate");
    report.config() = {{"kappa", kappa}, {"n", n}, {"seed", common.seed}};
    report.results() = {{"rows", d.num_rows()},
                        {"columns", d.ColumnNames()},
                        {"csv_sha256", Sha256Hex(text)}};
    if (!schema_out.empty()) {
      const std::string schema = d.schema().ToJson().dump(2) + "\n";
      WriteText(schema_out, schema);
      report.results()["schema_sha256"] = Sha256Hex(schema);
    }
    if (!out.empty() && out != "-") report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCommand {
  CommonOptions common;
  std::string kappas;
  std::string grid;
  std::size_t n = 1000;
  std::size_t reps = 10;
  AttackerOptions attackers;
  ThresholdOptions thresholds;
  SynthesisOptions synthesis;
  std::string out;
  std::string summary_out;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("sweep", "Risk across dependency strengths");
    AddCommon(sub, common, false);
    sub->add_option("--kappas", kappas, "Comma-separated kappa values");
    sub->add_option("--grid", grid, "Kappa grid start:stop:step");
    sub->add_option("--n", n, "Records per simulated dataset")->capture_default_str();
    sub->add_option("--reps", reps, "Replications per kappa")->capture_default_str();
    attackers.Add(sub, false);
    thresholds.Add(sub);
    synthesis.Add(sub);
    sub->add_option("--out", out, "Per-run CSV (kappa, rep, rapid, accuracy)");
    sub->add_option("--summary-out", summary_out, "Per-kappa summary CSV");
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    ApplyThreads(common);
    attackers.Validate();
    if (kappas.empty() == grid.empty()) throw ConfigError("give exactly one of --kappas or --grid");
    if (reps < 1) throw ConfigError("--reps must be >= 1");
    SweepConfig config;
    config.kappas = kappas.empty() ? ParseGrid(grid) : ParseNumberList(kappas, "--kappas");
    config.n = n;
    config.replications = reps;
    config.seed = common.seed;
    config.attacker = attackers.Spec(0, 0);
    config.synthesis = synthesis.Plan();
    thresholds.Into(config.assess);
    const SweepResult sweep = KappaSweep(config);

    std::ostringstream runs_csv, summary_csv;
    csv::WriteRecord(runs_csv, {"kappa", "rep", "rapid", "accuracy"});
    json runs = json::array();
    for (const auto& r : sweep.runs) {
      csv::WriteRecord(runs_csv, {csv::FormatReal(r.kappa), std::to_string(r.replication + 1),
                                  csv::FormatReal(r.score), csv::FormatReal(r.accuracy)});
      runs.push_back({{"kappa", r.kappa},
                      {"rep", r.replication + 1},
                      {"rapid", r.score},
                      {"accuracy", r.accuracy}});
    }
    csv::WriteRecord(summary_csv, {"kappa", "mean_rapid", "sd_rapid", "mean_accuracy", "reps"});
    json summary = json::array();
    for (const auto& s : sweep.summary) {
      csv::WriteRecord(summary_csv, {csv::FormatReal(s.kappa), csv::FormatReal(s.mean_score),
                                     csv::FormatReal(s.sd_score), csv::FormatReal(s.mean_accuracy),
                                     std::to_string(s.replications)});
      summary.push_back({{"kappa", s.kappa},
                         {"mean_rapid", s.mean_score},
                         {"sd_rapid", s.sd_score},
                         {"mean_accuracy", s.mean_accuracy},
                         {"reps", s.replications}});
    }
    if (!out.empty()) WriteText(out, runs_csv.str());
    if (!summary_out.empty()) WriteText(summary_out, summary_csv.str());

    Inputs inputs("");
    Report report("sweep");
    json& cfg = report.config();
    cfg = {{"kappas", config.kappas}, {"n", n}, {"reps", reps}, {"seed", common.seed}};
    cfg.update(thresholds.ToJson(true));
    cfg["attacker"] = config.attacker.ToJson();
    SynthesisPlan plan = config.synthesis;
    plan.m = 1;
    cfg["synthesis"] = plan.ToJson();
    report.results() = {{"runs", runs}, {"summary", summary}};
    report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeCommand {
  CommonOptions common;
  std::string original;
  std::size_t m = 5;
  std::size_t rows = 0;
  std::string out_prefix;
  SynthesisOptions synthesis;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("synthesize", "Sequential CART synthesis");
    AddCommon(sub, common);
    sub->add_option("--original", original, "Original data CSV")->required();
    sub->add_option("--m", m, "Number of synthetic replicates")->capture_default_str();
    sub->add_option("--rows", rows, "Records per replicate (default: as original)");
    sub->add_option("--out-prefix", out_prefix, "Writes PREFIX_1.csv ... PREFIX_m.csv")->required();
    synthesis.Add(sub);
    sub->callback([this] { code = Run(); });
  }

  int Run() {
    ApplyThreads(common);
    if (m < 1) throw ConfigError("--m must be >= 1");
    Inputs inputs(common.schema);
    Report report("synthesize");
    const Dataset data = inputs.Load("original", original);
    SynthesisPlan plan = synthesis.Plan();
    plan.m = m;
    plan.rows = rows;
    plan.seed = common.seed;
    const std::vector<Dataset> reps = SynthesizeCart(data, plan);
    json outputs = json::array();
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const std::string path = out_prefix + "_" + std::to_string(r + 1) + ".csv";
      const std::string text = ToCsvString(reps[r]);
      WriteText(path, text);
      outputs.push_back({{"path", path},
                         {"sha256", Sha256Hex(text)},
                         {"rows", reps[r].num_rows()},
                         {"replicated_records", CountReplicatedRecords(data, reps[r])}});
    }
    report.config() = {{"plan", plan.ToJson()}};
    report.results() = {{"replicates", outputs}};
    report.Write(common.report, inputs);
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// attribute

struct AttributeCommand {
  CommonOptions common;
  std::string records;
  std::string original;
  std::vector<std::string> qi;
  std::string interactions = "none";
  std::vector<std::string> conditions;
  std::vector<std::string> by;
  std::vector<std::string> bins;
  std::size_t replicate = 0;
  std::string attacker;
  std::string coef_out;
  std::string grid_out;
  std::string strata_out;
  double level = 0.95;
  int code = kExitOk;

  void Register(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("attribute", "Attribute risk flags to quasi-identifiers");
    AddCommon(sub, common);
    sub->add_option("--records", records, "Per-record CSV written by assess --records-out");
    sub->add_option("--original", original, "Original data CSV");
    sub->add_option("--qi", qi, "Quasi-identifiers, comma separated")->delimiter(',');
    sub->add_option("--interactions", interactions, "none, two_way or three_way")
        ->capture_default_str();
    sub->add_option("--condition", conditions,
                    "Conditioning values for a continuous QI, name=v1,v2 (repeatable)");
    sub->add_option("--by", by, "Stratify at-risk rates by these columns")->delimiter(',');
    sub->add_option("--bins", bins, "Equal-width bins for a continuous --by column, name=k");
    sub->add_option("--replicate", replicate, "Replicate to analyze (default: first in file)");
    sub->add_option("--attacker", attacker, "Attacker to analyze (default: first in file)");
    sub->add_option("--coef-out", coef_out, "Coefficient CSV");
    sub->add_option("--grid-out", grid_out, "Predicted-risk grid CSV");
    sub->add_option("--strata-out", strata_out, "Stratified rates CSV");
    sub->add_option("--level", level, "Wilson interval level")->capture_default_str();
    sub->callback([this] { code = Run(); });
  }

  // Reads flags and original row indices from a records CSV.
  RapidResult ReadRecords(const std::string& text, std::size_t n_rows) {
    const auto table = csv::Parse(text);
    if (table.size() < 2) throw Error(ErrorCode::kEmptyFile, "records file has no rows");
    const auto& header = table[0];
    auto col = [&](const std::string& name) -> std::optional<std::size_t> {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) return std::nullopt;
      return static_cast<std::size_t>(it - header.begin());
    };
    const auto row_col = col("row");
    const auto flag_col = col("at_risk");
    if (!row_col || !flag_col) {
      throw Error(ErrorCode::kMalformedCsv, "records file needs 'row' and 'at_risk' columns");
    }
    const auto rep_col = col("replicate");
    const auto att_col = col("attacker");
    std::string want_rep = replicate > 0 ? std::to_string(replicate) : "";
    std::string want_att = attacker;
    RapidResult r;
    r.categorical = true;
    r.tau = kDefaultTau;
    for (std::size_t i = 1; i < table.size(); ++i) {
      const auto& row = table[i];
      if (row.size() != header.size()) throw Error(ErrorCode::kMalformedCsv, "ragged records row");
      if (rep_col) {
        if (want_rep.empty()) want_rep = row[*rep_col];
        if (row[*rep_col] != want_rep) continue;
      }
      if (att_col) {
        if (want_att.empty()) want_att = row[*att_col];
        if (row[*att_col] != want_att) continue;
      }
      const auto id = csv::ParseReal(row[*row_col]);
      if (!id || *id < 0 || *id >= static_cast<double>(n_rows)) {
        throw Error(ErrorCode::kMalformedCsv, "record row '" + row[*row_col] + "' is out of range");
      }
      CategoricalRecordRisk rec;
      rec.row = static_cast<std::size_t>(*id);
      rec.at_risk = row[*flag_col] == "1";
      r.n_at_risk += rec.at_risk;
      r.categorical_records.push_back(rec);
    }
    r.n_evaluated = r.categorical_records.size();
    if (r.n_evaluated == 0) throw Error(ErrorCode::kEmptyInput, "no records match the selection");
    r.score = static_cast<double>(r.n_at_risk) / static_cast<double>(r.n_evaluated);
    selected_replicate = want_rep;
    selected_attacker = want_att;
    return r;
  }

  std::string selected_replicate;
  std::string selected_attacker;

  int Run() {
    ApplyThreads(common);
    if (records.empty()) throw ConfigError("--records is required (write one with assess --records-out)");
    if (original.empty()) throw ConfigError("--original is required");
    if (qi.empty() && by.empty()) throw ConfigError("give --qi for the model and/or --by for strata");
    AttributionOptions options;
    options.interactions = ParseInteractions(interactions);
    for (const auto& [name, values] : ParsePairs(conditions, "--condition")) {
      options.conditioning[name] = ParseNumberList(values, "--condition");
    }
    std::map<std::string, std::size_t> bin_counts;
    for (const auto& [name, value] : ParsePairs(bins, "--bins")) {
      const double v = ParseNumber(value, "--bins");
      if (v < 1 || v != std::floor(v)) throw ConfigError("--bins counts must be positive integers");
      bin_counts[name] = static_cast<std::size_t>(v);
    }
    Inputs inputs(common.schema);
    Report report("attribute");
    const Dataset data = inputs.Load("original", original);
    const std::string text = ReadFile(records);
    inputs.Note("records", records);
    const RapidResult result = ReadRecords(text, data.num_rows());

    json& res = report.results();
    res["score"] = result.score;
    res["n_evaluated"] = result.n_evaluated;
    res["n_at_risk"] = result.n_at_risk;
    if (!qi.empty()) {
      const AttributionModel model = FitAttribution(result, data, qi, options);
      json terms = json::array();
      for (const auto& t : model.terms) {
        terms.push_back({{"term", t.name},
                         {"estimate", t.estimate},
                         {"std_error", t.std_error},
                         {"z", t.z},
                         {"p_value", t.p_value}});
      }
      res["model"] = {{"terms", terms},
                      {"dropped", model.dropped},
                      {"converged", model.converged},
                      {"separation", model.separation},
                      {"ridge", model.ridge},
                      {"iterations", model.iterations},
                      {"deviance", model.deviance},
                      {"grid_rows", model.grid.size()}};
      if (!coef_out.empty()) {
        std::ostringstream s;
        WriteCoefficientsCsv(model, s);
        WriteText(coef_out, s.str());
      }
      if (!grid_out.empty()) {
        std::ostringstream s;
        WriteGridCsv(model, s);
        WriteText(grid_out, s.str());
      }
    }
    if (!by.empty()) {
      const StratifiedRisk strata = StratifyRisk(result, data, by, bin_counts, level);
      json groups = json::array();
      for (const auto& g : strata.groups) {
        groups.push_back({{"labels", g.labels},
                          {"n", g.n},
                          {"n_at_risk", g.n_at_risk},
                          {"rate", g.rate},
                          {"wilson", g.wilson.ToJson()}});
      }
      res["strata"] = {{"by", strata.by}, {"groups", groups}};
      if (!strata_out.empty()) {
        std::ostringstream s;
        WriteStratifiedCsv(strata, s);
        WriteText(strata_out, s.str());
      }
    }
    json cond = json::object();
    for (const auto& [name, values] : options.conditioning) cond[name] = values;
    json bins_json = json::object();
    for (const auto& [name, count] : bin_counts) bins_json[name] = count;
    report.config() = {{"qi", qi},
                       {"interactions", interactions},
                       {"conditioning", cond},
                       {"by", by},
                       {"bins", bins_json},
                       {"replicate", selected_replicate},
                       {"attacker", selected_attacker},
                       {"level", level},
                       {"seed", common.seed}};
    report.Write(common.report, inputs);
    return kExitOk;
  }
};

int Main(int argc, char** argv) {
  CLI::App app{"Attribute-inference disclosure risk for released tabular data", "rapid"};
  app.set_version_flag("--version", RAPID_VERSION);
  app.require_subcommand(1);
  AssessCommand assess;
  CurveCommand curve;
  CvCommand cv;
  PermtestCommand permtest;
  SimulateCommand simulate;
  SweepCommand sweep;
  SynthesizeCommand synthesize;
  AttributeCommand attribute;
  assess.Register(app);
  curve.Register(app);
  cv.Register(app);
  permtest.Register(app);
  simulate.Register(app);
  sweep.Register(app);
  synthesize.Register(app);
  attribute.Register(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "rapid: " << e.what() << "\n" << app.help();
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "rapid: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rapid: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  for (int c : {assess.code, curve.code, cv.code, permtest.code, simulate.code, sweep.code,
                synthesize.code, attribute.code}) {
    if (c != kExitOk) return c;
  }
  return kExitOk;
}

}  // namespace
}  // namespace rapid::cli

int main(int argc, char** argv) { return rapid::cli::Main(argc, argv); }
