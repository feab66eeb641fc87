#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "citeforge/errors.hpp"
#include "json.hpp"

namespace citeforge::humaneval {

enum class System { kGroundTruth, kBaseline, kContextualized };
enum class Dimension { kFluency, kRelevance, kCoherence, kOverall };

inline constexpr std::array kAllDimensions = {Dimension::kFluency, Dimension::kRelevance,
                                              Dimension::kCoherence, Dimension::kOverall};

std::string_view to_string(System s);
std::string_view to_string(Dimension d);
std::optional<System> parse_system(std::string_view s);
std::optional<Dimension> parse_dimension(std::string_view s);

using SystemPair = std::pair<System, System>;

/// "contextualized:baseline" style pair.
std::optional<SystemPair> parse_pair(std::string_view s);

struct Candidate {
  std::string candidate_id;  // opaque, drawn from the run seed
  std::string text;
  System system = System::kBaseline;
};

struct EvalSample {
  std::string sample_id;
  std::string input;
  std::vector<Candidate> candidates;
  std::vector<std::size_t> display_order;  // display position -> candidates index
};

struct SampleSpec {
  std::string sample_id;
  std::string input;
  std::vector<std::pair<System, std::string>> candidates;
};

/// Best-first tiers of candidate ids; candidates sharing a tier are tied.
using Ranking = std::vector<std::vector<std::string>>;

struct Judgment {
  std::uint64_t seq = 0;  // assigned on acceptance
  std::string judge_id;
  std::string sample_id;
  Dimension dimension = Dimension::kOverall;
  Ranking ranking;
  std::string timestamp;     // ISO-8601 UTC; filled on acceptance when empty
  std::string client_token;  // optional idempotency key
};

struct RunConfig {
  std::size_t group_count = 2;
  std::size_t samples_per_group = 30;
  std::uint64_t seed = 0;
  // Comparisons reported by default; tallies for any pair can still be asked for.
  std::vector<SystemPair> comparisons{{System::kContextualized, System::kBaseline},
                                      {System::kContextualized, System::kGroundTruth}};
};

struct JudgeGroup {
  std::vector<std::string> judges;
  std::vector<std::string> sample_ids;
};

struct TallyCell {
  std::size_t prefer_a = 0;
  std::size_t prefer_b = 0;
  std::size_t indistinguishable = 0;
  std::size_t total() const { return prefer_a + prefer_b + indistinguishable; }
  bool operator==(const TallyCell&) const = default;
};

struct TallyTable {
  SystemPair pair;
  std::map<Dimension, TallyCell> cells;
};

struct PairAgreement {
  std::string judge_a;
  std::string judge_b;
  std::map<Dimension, std::optional<double>> per_dimension;
  std::optional<double> pooled;
  std::size_t overlap = 0;  // samples both judged, any dimension
};

struct GroupAgreement {
  std::size_t group = 0;
  std::vector<std::string> judges;
  std::vector<PairAgreement> pairs;
  std::optional<double> mean_pooled;  // mean of defined pooled pair values
  // Mean pooled tau over the pairs that do not involve the judge.
  std::map<std::string, std::optional<double>> leave_one_out;
};

struct AgreementReport {
  std::vector<GroupAgreement> groups;
  std::string reason;  // set when no pair could be compared
};

struct SampleView {
  const EvalSample* sample = nullptr;
  std::size_t completed = 0;
  std::size_t total = 0;
};

struct Done {
  std::size_t completed = 0;
  std::size_t total = 0;
};

using NextResult = std::variant<SampleView, Done>;

struct SubmitResult {
  std::uint64_t seq = 0;
  bool replaced = false;   // superseded an earlier live judgment
  bool duplicate = false;  // same client_token seen before; nothing appended
};

/// One evaluation run: sample assignment, judgment log, and the statistics
/// computed from it. Not synchronized; RunStore serializes access.
class EvalRun {
 public:
  /// Throws ArgumentError on invalid roster, sample count, or samples.
  static EvalRun create(std::string run_id, std::vector<SampleSpec> samples,
                        std::vector<std::string> judges, RunConfig config);

  const std::string& id() const noexcept { return id_; }
  const RunConfig& config() const noexcept { return config_; }
  const std::vector<JudgeGroup>& groups() const noexcept { return groups_; }
  const EvalSample* sample(std::string_view sample_id) const;
  bool has_judge(std::string_view judge_id) const;

  /// Judgments expected per dimension when every judge finishes.
  std::size_t expected_per_dimension() const;

  /// First assigned sample the judge has not finished in every dimension.
  NextResult next_sample(std::string_view judge_id) const;

  /// Validates a submission and assigns its sequence number and timestamp
  /// without recording it. A repeated client_token yields `duplicate`.
  std::pair<Judgment, SubmitResult> prepare(Judgment j) const;

  /// prepare() + replay(). Throws NotFoundError / ValidationError.
  SubmitResult submit(Judgment j);

  /// Replays an already-sequenced record (log recovery). No validation
  /// beyond ids.
  void replay(const Judgment& j);

  const std::vector<Judgment>& history() const noexcept { return log_; }
  std::vector<Judgment> live() const;

  TallyTable tally(SystemPair pair) const;

  /// Pairwise tau-b within each group. Without `pair`, vectors pool every
  /// configured comparison. `exclude` drops one judge entirely.
  AgreementReport agreement(std::optional<SystemPair> pair = std::nullopt,
                            std::optional<std::string> exclude = std::nullopt) const;

  /// Preference of one ranking restricted to (a, b): +1 a, -1 b, 0 tie.
  /// nullopt if the sample lacks either system.
  std::optional<int> preference(const Judgment& j, SystemPair pair) const;

  nlohmann::ordered_json to_json() const;
  static EvalRun from_json(const nlohmann::json& j);

 private:
  using LiveKey = std::tuple<std::string, std::string, Dimension>;

  std::string id_;
  RunConfig config_;
  std::vector<EvalSample> samples_;
  std::map<std::string, std::size_t, std::less<>> sample_index_;
  std::vector<JudgeGroup> groups_;
  std::map<std::string, std::size_t, std::less<>> judge_group_;
  std::vector<Judgment> log_;
  std::map<LiveKey, std::size_t> live_;
  std::map<std::string, std::uint64_t> tokens_;

  void index_live(std::size_t log_pos);
};

nlohmann::ordered_json to_json(const Judgment& j);
Judgment judgment_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TallyTable& t);
nlohmann::ordered_json to_json(const AgreementReport& r);

/// Thread-safe registry of runs. With a data directory, each run lives in
/// <dir>/runs/<run_id>/ as run.json plus an append-only judgments.jsonl, and
/// existing runs are reloaded on construction.
class RunStore {
 public:
  explicit RunStore(std::optional<std::filesystem::path> data_dir = std::nullopt);

  std::string create_run(std::vector<SampleSpec> samples, std::vector<std::string> judges,
                         RunConfig config);

  /// Runs `fn(const EvalRun&)` under the store lock.
  template <typename Fn>
  auto read(std::string_view run_id, Fn&& fn) const {
    std::lock_guard lock(mu_);
    return fn(get(run_id));
  }

  SubmitResult submit(std::string_view run_id, Judgment j);

  std::vector<std::string> run_ids() const;

  /// Loads one persisted run without a store (offline reporting).
  static EvalRun load_run(const std::filesystem::path& run_dir);

 private:
  const EvalRun& get(std::string_view run_id) const;
  EvalRun& get(std::string_view run_id);

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, EvalRun, std::less<>> runs_;
  std::size_t counter_ = 0;
};

}  // namespace citeforge::humaneval
