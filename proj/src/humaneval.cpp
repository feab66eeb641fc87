#include "citeforge/humaneval.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "citeforge/kendall.hpp"

namespace citeforge::humaneval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(System s) {
  switch (s) {
    case System::kGroundTruth: return "ground_truth";
    case System::kBaseline: return "baseline";
    case System::kContextualized: return "contextualized";
  }
  return "baseline";
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kFluency: return "fluency";
    case Dimension::kRelevance: return "relevance";
    case Dimension::kCoherence: return "coherence";
    case Dimension::kOverall: return "overall";
  }
  return "overall";
}

std::optional<System> parse_system(std::string_view s) {
  for (auto v : {System::kGroundTruth, System::kBaseline, System::kContextualized}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Dimension> parse_dimension(std::string_view s) {
  for (auto d : kAllDimensions) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::optional<SystemPair> parse_pair(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto a = parse_system(s.substr(0, colon));
  auto b = parse_system(s.substr(colon + 1));
  if (!a || !b || *a == *b) return std::nullopt;
  return SystemPair{*a, *b};
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return os.str();
}

std::string opaque_id(std::mt19937_64& rng) {
  std::ostringstream os;
  os << "c" << std::hex << std::setw(8) << std::setfill('0') << (rng() & 0xffffffffULL);
  return os.str();
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EvalRun EvalRun::create(std::string run_id, std::vector<SampleSpec> samples,
                        std::vector<std::string> judges, RunConfig config) {
  if (config.group_count == 0) throw ArgumentError("group_count must be >= 1");
  if (config.samples_per_group == 0) throw ArgumentError("samples_per_group must be >= 1");
  if (judges.empty() || judges.size() % config.group_count != 0) {
    throw ArgumentError("judge roster of " + std::to_string(judges.size()) +
                        " cannot be split evenly into " + std::to_string(config.group_count) + " groups");
  }
  if (std::set<std::string>(judges.begin(), judges.end()).size() != judges.size()) {
    throw ArgumentError("duplicate judge id in roster");
  }
  const std::size_t needed = config.group_count * config.samples_per_group;
  if (samples.size() < needed) {
    throw ArgumentError("need " + std::to_string(needed) + " samples, got " + std::to_string(samples.size()));
  }
  for (const auto& [a, b] : config.comparisons) {
    if (a == b) throw ArgumentError("a comparison needs two different systems");
  }

  EvalRun run;
  run.id_ = std::move(run_id);
  run.config_ = config;
  std::mt19937_64 rng(config.seed);

  std::set<std::string> seen_samples;
  for (auto& spec : samples) {
    if (spec.sample_id.empty() || !seen_samples.insert(spec.sample_id).second) {
      throw ArgumentError("sample ids must be non-empty and unique");
    }
    if (spec.candidates.size() < 2) throw ArgumentError("each sample needs at least two candidates");
    std::set<System> systems;
    EvalSample s;
    s.sample_id = spec.sample_id;
    s.input = std::move(spec.input);
    std::set<std::string> ids;
    for (auto& [system, text] : spec.candidates) {
      if (!systems.insert(system).second) throw ArgumentError("duplicate system within a sample");
      std::string cid;
      do {
        cid = opaque_id(rng);
      } while (!ids.insert(cid).second);
      s.candidates.push_back({cid, std::move(text), system});
    }
    s.display_order.resize(s.candidates.size());
    for (std::size_t i = 0; i < s.display_order.size(); ++i) s.display_order[i] = i;
    std::shuffle(s.display_order.begin(), s.display_order.end(), rng);
    run.samples_.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < run.samples_.size(); ++i) run.sample_index_[run.samples_[i].sample_id] = i;

  std::vector<std::size_t> order(run.samples_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t per_group = judges.size() / config.group_count;
  for (std::size_t g = 0; g < config.group_count; ++g) {
    JudgeGroup group;
    group.judges.assign(judges.begin() + static_cast<std::ptrdiff_t>(g * per_group),
                        judges.begin() + static_cast<std::ptrdiff_t>((g + 1) * per_group));
    for (std::size_t k = 0; k < config.samples_per_group; ++k) {
      group.sample_ids.push_back(run.samples_[order[g * config.samples_per_group + k]].sample_id);
    }
    for (const auto& j : group.judges) run.judge_group_[j] = g;
    run.groups_.push_back(std::move(group));
  }
  return run;
}

const EvalSample* EvalRun::sample(std::string_view sample_id) const {
  auto it = sample_index_.find(sample_id);
  return it == sample_index_.end() ? nullptr : &samples_[it->second];
}

bool EvalRun::has_judge(std::string_view judge_id) const { return judge_group_.contains(judge_id); }

std::size_t EvalRun::expected_per_dimension() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.judges.size() * g.sample_ids.size();
  return n;
}

NextResult EvalRun::next_sample(std::string_view judge_id) const {
  auto it = judge_group_.find(judge_id);
  if (it == judge_group_.end()) throw NotFoundError("unknown judge '" + std::string(judge_id) + "'");
  const auto& group = groups_[it->second];
  const EvalSample* pending = nullptr;
  std::size_t completed = 0;
  for (const auto& sid : group.sample_ids) {
    bool finished = true;
    for (auto d : kAllDimensions) {
      finished = finished && live_.contains(LiveKey{std::string(judge_id), sid, d});
    }
    if (finished) {
      ++completed;
    } else if (!pending) {
      pending = sample(sid);
    }
  }
  const std::size_t total = group.sample_ids.size();
  if (!pending) return Done{completed, total};
  return SampleView{pending, completed, total};
}

std::pair<Judgment, SubmitResult> EvalRun::prepare(Judgment j) const {
  SubmitResult result;
  if (!j.client_token.empty()) {
    if (auto it = tokens_.find(j.client_token); it != tokens_.end()) {
      result.seq = it->second;
      result.duplicate = true;
      return {std::move(j), result};
    }
  }
  auto g = judge_group_.find(j.judge_id);
  if (g == judge_group_.end()) throw NotFoundError("unknown judge '" + j.judge_id + "'");
  const EvalSample* s = sample(j.sample_id);
  if (!s) throw NotFoundError("unknown sample '" + j.sample_id + "'");
  const auto& assigned = groups_[g->second].sample_ids;
  if (std::find(assigned.begin(), assigned.end(), j.sample_id) == assigned.end()) {
    throw ValidationError({{j.judge_id, "/sample_id", "sample not assigned to this judge"}});
  }

  std::vector<Issue> issues;
  std::set<std::string> covered;
  std::set<std::string> valid;
  for (const auto& c : s->candidates) valid.insert(c.candidate_id);
  for (std::size_t t = 0; t < j.ranking.size(); ++t) {
    if (j.ranking[t].empty()) issues.push_back({j.judge_id, "/ranking/" + std::to_string(t), "empty tier"});
    for (const auto& cid : j.ranking[t]) {
      if (!valid.contains(cid)) {
        issues.push_back({j.judge_id, "/ranking/" + std::to_string(t), "unknown candidate " + cid});
      } else if (!covered.insert(cid).second) {
        issues.push_back({j.judge_id, "/ranking/" + std::to_string(t), "candidate ranked twice " + cid});
      }
    }
  }
  if (covered.size() != valid.size()) {
    issues.push_back({j.judge_id, "/ranking", "ranking must cover every candidate exactly once"});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  j.seq = log_.empty() ? 1 : log_.back().seq + 1;
  if (j.timestamp.empty()) j.timestamp = utc_now();
  result.seq = j.seq;
  result.replaced = live_.contains(LiveKey{j.judge_id, j.sample_id, j.dimension});
  return {std::move(j), result};
}

SubmitResult EvalRun::submit(Judgment j) {
  auto [prepared, result] = prepare(std::move(j));
  if (!result.duplicate) replay(prepared);
  return result;
}

void EvalRun::replay(const Judgment& j) {
  if (!has_judge(j.judge_id) || !sample(j.sample_id)) {
    throw ValidationError({{j.judge_id, "/sample_id", "judgment refers to unknown judge or sample"}});
  }
  if (!log_.empty() && j.seq <= log_.back().seq) {
    throw ValidationError({{std::to_string(j.seq), "/seq", "sequence numbers must increase"}});
  }
  log_.push_back(j);
  index_live(log_.size() - 1);
}

void EvalRun::index_live(std::size_t pos) {
  const auto& j = log_[pos];
  live_[LiveKey{j.judge_id, j.sample_id, j.dimension}] = pos;
  if (!j.client_token.empty()) tokens_[j.client_token] = j.seq;
}

std::vector<Judgment> EvalRun::live() const {
  std::vector<std::size_t> positions;
  positions.reserve(live_.size());
  for (const auto& [_, pos] : live_) positions.push_back(pos);
  std::sort(positions.begin(), positions.end());
  std::vector<Judgment> out;
  out.reserve(positions.size());
  for (auto p : positions) out.push_back(log_[p]);
  return out;
}

std::optional<int> EvalRun::preference(const Judgment& j, SystemPair pair) const {
  const EvalSample* s = sample(j.sample_id);
  if (!s) return std::nullopt;
  std::string id_a, id_b;
  for (const auto& c : s->candidates) {
    if (c.system == pair.first) id_a = c.candidate_id;
    if (c.system == pair.second) id_b = c.candidate_id;
  }
  if (id_a.empty() || id_b.empty()) return std::nullopt;
  std::optional<std::size_t> tier_a, tier_b;
  for (std::size_t t = 0; t < j.ranking.size(); ++t) {
    for (const auto& cid : j.ranking[t]) {
      if (cid == id_a) tier_a = t;
      if (cid == id_b) tier_b = t;
    }
  }
  if (!tier_a || !tier_b) return std::nullopt;
  if (*tier_a < *tier_b) return 1;
  if (*tier_b < *tier_a) return -1;
  return 0;
}

TallyTable EvalRun::tally(SystemPair pair) const {
  TallyTable t;
  t.pair = pair;
  for (auto d : kAllDimensions) t.cells[d] = {};
  for (const auto& [key, pos] : live_) {
    const auto& j = log_[pos];
    const auto pref = preference(j, pair);
    if (!pref) continue;
    auto& cell = t.cells[j.dimension];
    if (*pref > 0) {
      ++cell.prefer_a;
    } else if (*pref < 0) {
      ++cell.prefer_b;
    } else {
      ++cell.indistinguishable;
    }
  }
  return t;
}

AgreementReport EvalRun::agreement(std::optional<SystemPair> pair, std::optional<std::string> exclude) const {
  AgreementReport report;
  const std::vector<SystemPair> pairs = pair ? std::vector<SystemPair>{*pair} : config_.comparisons;

  // Live judgment lookup by (judge, sample, dimension).
  auto find_live = [&](const std::string& judge, const std::string& sid, Dimension d) -> const Judgment* {
    auto it = live_.find(LiveKey{judge, sid, d});
    return it == live_.end() ? nullptr : &log_[it->second];
  };

  for (std::size_t g = 0; g < groups_.size(); ++g) {
    GroupAgreement ga;
    ga.group = g;
    for (const auto& j : groups_[g].judges) {
      if (!exclude || j != *exclude) ga.judges.push_back(j);
    }
    if (ga.judges.size() < 2) continue;

    for (std::size_t a = 0; a < ga.judges.size(); ++a) {
      for (std::size_t b = a + 1; b < ga.judges.size(); ++b) {
        PairAgreement pa;
        pa.judge_a = ga.judges[a];
        pa.judge_b = ga.judges[b];
        std::vector<int> pooled_a, pooled_b;
        std::set<std::string> overlap;
        for (auto d : kAllDimensions) {
          std::vector<int> xa, xb;
          for (const auto& sid : groups_[g].sample_ids) {
            const Judgment* ja = find_live(pa.judge_a, sid, d);
            const Judgment* jb = find_live(pa.judge_b, sid, d);
            if (!ja || !jb) continue;
            overlap.insert(sid);
            for (const auto& p : pairs) {
              auto va = preference(*ja, p);
              auto vb = preference(*jb, p);
              if (!va || !vb) continue;
              xa.push_back(*va);
              xb.push_back(*vb);
            }
          }
          pa.per_dimension[d] = xa.size() >= 2 ? kendall_tau_b(xa, xb) : std::nullopt;
          pooled_a.insert(pooled_a.end(), xa.begin(), xa.end());
          pooled_b.insert(pooled_b.end(), xb.begin(), xb.end());
        }
        pa.pooled = pooled_a.size() >= 2 ? kendall_tau_b(pooled_a, pooled_b) : std::nullopt;
        pa.overlap = overlap.size();
        ga.pairs.push_back(std::move(pa));
      }
    }

    std::vector<double> all;
    for (const auto& p : ga.pairs) {
      if (p.pooled) all.push_back(*p.pooled);
    }
    ga.mean_pooled = mean_of(all);
    for (const auto& judge : ga.judges) {
      std::vector<double> rest;
      for (const auto& p : ga.pairs) {
        if (p.judge_a != judge && p.judge_b != judge && p.pooled) rest.push_back(*p.pooled);
      }
      ga.leave_one_out[judge] = mean_of(rest);
    }
    report.groups.push_back(std::move(ga));
  }
  if (report.groups.empty()) report.reason = "no group has two or more judges to compare";
  return report;
}

ordered_json to_json(const Judgment& j) {
  ordered_json r = ordered_json::array();
  for (const auto& tier : j.ranking) r.push_back(tier);
  ordered_json out;
  out["seq"] = j.seq;
  out["judge_id"] = j.judge_id;
  out["sample_id"] = j.sample_id;
  out["dimension"] = std::string(to_string(j.dimension));
  out["ranking"] = std::move(r);
  out["timestamp"] = j.timestamp;
  if (!j.client_token.empty()) out["client_token"] = j.client_token;
  return out;
}

Judgment judgment_from_json(const json& j) {
  Judgment out;
  std::vector<Issue> issues;
  auto str = [&](const char* key, std::string& dst, bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) issues.push_back({"judgment", std::string("/") + key, "missing field"});
      return;
    }
    if (!it->is_string()) {
      issues.push_back({"judgment", std::string("/") + key, "expected string"});
      return;
    }
    dst = it->get<std::string>();
  };
  if (!j.is_object()) throw ValidationError({{"judgment", "", "expected JSON object"}});
  str("judge_id", out.judge_id, true);
  str("sample_id", out.sample_id, true);
  str("timestamp", out.timestamp, false);
  str("client_token", out.client_token, false);
  std::string dim;
  str("dimension", dim, true);
  if (auto d = parse_dimension(dim)) {
    out.dimension = *d;
  } else if (j.contains("dimension")) {
    issues.push_back({"judgment", "/dimension", "unknown dimension"});
  }
  if (auto it = j.find("seq"); it != j.end() && it->is_number_unsigned()) out.seq = it->get<std::uint64_t>();
  auto r = j.find("ranking");
  if (r == j.end() || !r->is_array()) {
    issues.push_back({"judgment", "/ranking", "expected array of tiers"});
  } else {
    for (const auto& tier : *r) {
      std::vector<std::string> ids;
      if (tier.is_string()) {
        ids.push_back(tier.get<std::string>());
      } else if (tier.is_array() && std::all_of(tier.begin(), tier.end(), [](const json& v) { return v.is_string(); })) {
        for (const auto& v : tier) ids.push_back(v.get<std::string>());
      } else {
        issues.push_back({"judgment", "/ranking", "each tier must be a string or array of strings"});
        continue;
      }
      out.ranking.push_back(std::move(ids));
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return out;
}

ordered_json to_json(const TallyTable& t) {
  ordered_json cells;
  for (const auto& [d, c] : t.cells) {
    cells[std::string(to_string(d))] = {{"a_preferred", c.prefer_a},
                                        {"b_preferred", c.prefer_b},
                                        {"indistinguishable", c.indistinguishable},
                                        {"total", c.total()}};
  }
  return {{"cells", std::move(cells)}};
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

ordered_json to_json(const AgreementReport& r) {
  ordered_json groups = ordered_json::array();
  for (const auto& g : r.groups) {
    ordered_json pairs = ordered_json::array();
    for (const auto& p : g.pairs) {
      ordered_json dims;
      for (const auto& [d, v] : p.per_dimension) dims[std::string(to_string(d))] = opt(v);
      pairs.push_back({{"judge_a", p.judge_a},
                       {"judge_b", p.judge_b},
                       {"overlap", p.overlap},
                       {"per_dimension", std::move(dims)},
                       {"pooled", opt(p.pooled)}});
    }
    ordered_json loo = ordered_json::object();
    for (const auto& [j, v] : g.leave_one_out) loo[j] = opt(v);
    groups.push_back({{"group", g.group},
                      {"judges", g.judges},
                      {"pairs", std::move(pairs)},
                      {"mean_pooled", opt(g.mean_pooled)},
                      {"leave_one_out", std::move(loo)}});
  }
  ordered_json out{{"groups", std::move(groups)}};
  if (!r.reason.empty()) out["reason"] = r.reason;
  return out;
}

ordered_json EvalRun::to_json() const {
  ordered_json samples = ordered_json::array();
  for (const auto& s : samples_) {
    ordered_json cands = ordered_json::array();
    for (const auto& c : s.candidates) {
      cands.push_back({{"candidate_id", c.candidate_id},
                       {"system", std::string(humaneval::to_string(c.system))},
                       {"text", c.text}});
    }
    samples.push_back({{"sample_id", s.sample_id},
                       {"input", s.input},
                       {"candidates", std::move(cands)},
                       {"display_order", s.display_order}});
  }
  ordered_json groups = ordered_json::array();
  for (const auto& g : groups_) groups.push_back({{"judges", g.judges}, {"sample_ids", g.sample_ids}});
  ordered_json comparisons = ordered_json::array();
  for (const auto& [a, b] : config_.comparisons) {
    comparisons.push_back({std::string(humaneval::to_string(a)), std::string(humaneval::to_string(b))});
  }
  return {{"run_id", id_},
          {"config",
           {{"group_count", config_.group_count},
            {"samples_per_group", config_.samples_per_group},
            {"seed", config_.seed},
            {"comparisons", std::move(comparisons)}}},
          {"groups", std::move(groups)},
          {"samples", std::move(samples)}};
}

EvalRun EvalRun::from_json(const json& j) {
  EvalRun run;
  run.id_ = j.at("run_id").get<std::string>();
  const auto& cfg = j.at("config");
  run.config_.group_count = cfg.at("group_count").get<std::size_t>();
  run.config_.samples_per_group = cfg.at("samples_per_group").get<std::size_t>();
  run.config_.seed = cfg.at("seed").get<std::uint64_t>();
  run.config_.comparisons.clear();
  for (const auto& c : cfg.at("comparisons")) {
    auto a = parse_system(c.at(0).get<std::string>());
    auto b = parse_system(c.at(1).get<std::string>());
    if (!a || !b) throw ValidationError({{run.id_, "/config/comparisons", "unknown system"}});
    run.config_.comparisons.emplace_back(*a, *b);
  }
  for (const auto& sj : j.at("samples")) {
    EvalSample s;
    s.sample_id = sj.at("sample_id").get<std::string>();
    s.input = sj.at("input").get<std::string>();
    for (const auto& cj : sj.at("candidates")) {
      auto sys = parse_system(cj.at("system").get<std::string>());
      if (!sys) throw ValidationError({{run.id_, "/samples", "unknown system"}});
      s.candidates.push_back({cj.at("candidate_id").get<std::string>(), cj.at("text").get<std::string>(), *sys});
    }
    s.display_order = sj.at("display_order").get<std::vector<std::size_t>>();
    run.samples_.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < run.samples_.size(); ++i) run.sample_index_[run.samples_[i].sample_id] = i;
  for (const auto& gj : j.at("groups")) {
    JudgeGroup g;
    g.judges = gj.at("judges").get<std::vector<std::string>>();
    g.sample_ids = gj.at("sample_ids").get<std::vector<std::string>>();
    for (const auto& judge : g.judges) run.judge_group_[judge] = run.groups_.size();
    run.groups_.push_back(std::move(g));
  }
  return run;
}

namespace fs = std::filesystem;

RunStore::RunStore(std::optional<fs::path> data_dir) : dir_(std::move(data_dir)) {
  if (!dir_) return;
  const fs::path runs = *dir_ / "runs";
  std::error_code ec;
  fs::create_directories(runs, ec);
  if (ec) throw IoError("cannot create " + runs.string() + ": " + ec.message());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(runs)) {
    if (entry.is_directory() && fs::exists(entry.path() / "run.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    EvalRun run = load_run(d);
    const std::string id = run.id();
    runs_.emplace(id, std::move(run));
  }
  counter_ = runs_.size();
}

EvalRun RunStore::load_run(const fs::path& run_dir) {
  std::ifstream in(run_dir / "run.json", std::ios::binary);
  if (!in) throw IoError("cannot open " + (run_dir / "run.json").string());
  EvalRun run = EvalRun::from_json(json::parse(in));
  std::ifstream log(run_dir / "judgments.jsonl", std::ios::binary);
  std::string line;
  while (log && std::getline(log, line)) {
    if (line.empty()) continue;
    run.replay(judgment_from_json(json::parse(line)));
  }
  return run;
}

std::string RunStore::create_run(std::vector<SampleSpec> samples, std::vector<std::string> judges,
                                 RunConfig config) {
  std::lock_guard lock(mu_);
  std::string id;
  do {
    std::ostringstream os;
    os << "run-" << std::setw(4) << std::setfill('0') << ++counter_;
    id = os.str();
  } while (runs_.contains(id) || (dir_ && fs::exists(*dir_ / "runs" / id)));

  EvalRun run = EvalRun::create(id, std::move(samples), std::move(judges), std::move(config));
  if (dir_) {
    const fs::path rd = *dir_ / "runs" / id;
    fs::create_directories(rd);
    std::ofstream out(rd / "run.json", std::ios::binary | std::ios::trunc);
    out << run.to_json().dump(2) << '\n';
    if (!out.flush()) throw IoError("cannot write " + (rd / "run.json").string());
    std::ofstream(rd / "judgments.jsonl", std::ios::binary | std::ios::app);
  }
  runs_.emplace(id, std::move(run));
  return id;
}

SubmitResult RunStore::submit(std::string_view run_id, Judgment j) {
  std::lock_guard lock(mu_);
  EvalRun& run = get(run_id);
  auto [prepared, result] = run.prepare(std::move(j));
  if (result.duplicate) return result;
  if (dir_) {
    const fs::path path = *dir_ / "runs" / run.id() / "judgments.jsonl";
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << to_json(prepared).dump() << '\n';
    if (!out.flush()) throw IoError("cannot append to " + path.string());
  }
  run.replay(prepared);
  return result;
}

std::vector<std::string> RunStore::run_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : runs_) ids.push_back(id);
  return ids;
}

const EvalRun& RunStore::get(std::string_view run_id) const {
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw NotFoundError("unknown run '" + std::string(run_id) + "'");
  return it->second;
}

EvalRun& RunStore::get(std::string_view run_id) {
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw NotFoundError("unknown run '" + std::string(run_id) + "'");
  return it->second;
}

}  // namespace citeforge::humaneval
