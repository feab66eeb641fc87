#include <random>
#include <set>

#include "citeforge/humaneval.hpp"
#include "citeforge/kendall.hpp"
#include "doctest.h"
#include "support/judgment_log.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace citeforge;
using namespace citeforge::humaneval;

namespace {

constexpr SystemPair kVsBaseline{System::kContextualized, System::kBaseline};
constexpr SystemPair kVsGroundTruth{System::kContextualized, System::kGroundTruth};

RunConfig small_config(std::size_t groups, std::size_t per_group, std::uint64_t seed = 3) {
  RunConfig c;
  c.group_count = groups;
  c.samples_per_group = per_group;
  c.seed = seed;
  return c;
}

std::string candidate_of(const EvalRun& run, const std::string& sid, System s) {
  for (const auto& c : run.sample(sid)->candidates) {
    if (c.system == s) return c.candidate_id;
  }
  return {};
}

// Ranking putting `order` best-first, one system per tier.
Ranking strict(const EvalRun& run, const std::string& sid, std::initializer_list<System> order) {
  Ranking r;
  for (auto s : order) r.push_back({candidate_of(run, sid, s)});
  return r;
}

Judgment judgment(std::string judge, std::string sid, Dimension d, Ranking r, std::string token = {}) {
  Judgment j;
  j.judge_id = std::move(judge);
  j.sample_id = std::move(sid);
  j.dimension = d;
  j.ranking = std::move(r);
  j.client_token = std::move(token);
  return j;
}

EvalRun reference_run(std::uint64_t seed) {
  auto run = EvalRun::create("reference", fixtures::three_way_samples(60), fixtures::six_judges(),
                             small_config(2, 30, seed));
  for (auto& j : fixtures::judgments_for(run, fixtures::reference_table(), seed)) run.submit(j);
  return run;
}

}  // namespace

TEST_SUITE("humaneval") {
  TEST_CASE("tau-b matches the pair-counting reference") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 2 + rng() % 19;
      std::vector<int> x(n), y(n);
      for (auto& v : x) v = static_cast<int>(rng() % 3) - 1;
      for (auto& v : y) v = static_cast<int>(rng() % 3) - 1;
      const auto got = kendall_tau_b(x, y);
      const auto want = oracle::tau_b(x, y);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(std::abs(*got - *want) <= 1e-9);
    }
  }

  TEST_CASE("tau-b worked example and edge cases") {
    const std::vector<int> x{1, 0, -1, 1}, y{1, 1, -1, 0};
    const auto t = kendall_tau_b(x, y);
    REQUIRE(t);
    CHECK(*t == doctest::Approx(*oracle::tau_b(x, y)).epsilon(1e-12));
    CHECK(*t == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
    CHECK_FALSE(kendall_tau_b(std::vector<int>{1, 1, 1}, std::vector<int>{1, 0, -1}));
    CHECK(*kendall_tau_b(x, x) == doctest::Approx(1.0));
    CHECK_THROWS_AS(kendall_tau_b(std::vector<int>{1}, std::vector<int>{1}), ArgumentError);
    CHECK_THROWS_AS(kendall_tau_b(std::vector<int>{1, 0}, std::vector<int>{1}), ArgumentError);
  }

  TEST_CASE("run creation") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(60), fixtures::six_judges(), small_config(2, 30));
    REQUIRE(run.groups().size() == 2);
    CHECK(run.groups()[0].judges == std::vector<std::string>{"j1", "j2", "j3"});
    std::set<std::string> all;
    for (const auto& g : run.groups()) all.insert(g.sample_ids.begin(), g.sample_ids.end());
    CHECK(all.size() == 60);
    CHECK(run.expected_per_dimension() == 180);

    // Candidate ids are opaque and do not reveal the system.
    for (const auto& c : run.sample("s0")->candidates) {
      CHECK(c.candidate_id.find("context") == std::string::npos);
      CHECK(c.candidate_id.find("base") == std::string::npos);
      CHECK(c.candidate_id.find("ground") == std::string::npos);
    }

    CHECK_THROWS_AS(EvalRun::create("r", fixtures::three_way_samples(10), fixtures::six_judges(), small_config(2, 30)),
                    ArgumentError);
    CHECK_THROWS_AS(EvalRun::create("r", fixtures::three_way_samples(60), {"a", "b", "c"}, small_config(2, 30)),
                    ArgumentError);
    CHECK_THROWS_AS(EvalRun::create("r", fixtures::three_way_samples(60), {"a", "a"}, small_config(2, 30)),
                    ArgumentError);
  }

  TEST_CASE("display order depends only on the seed") {
    auto a = EvalRun::create("r", fixtures::three_way_samples(8), {"j1", "j2"}, small_config(1, 8, 9));
    auto b = EvalRun::create("r", fixtures::three_way_samples(8), {"j1", "j2"}, small_config(1, 8, 9));
    for (const auto& g : a.groups()) {
      for (const auto& sid : g.sample_ids) {
        CHECK(a.sample(sid)->display_order == b.sample(sid)->display_order);
        CHECK(candidate_of(a, sid, System::kBaseline) == candidate_of(b, sid, System::kBaseline));
      }
    }
  }

  TEST_CASE("next sample walks the assignment") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(2), {"j1"}, small_config(1, 2));
    const auto& ids = run.groups()[0].sample_ids;
    auto first = std::get<SampleView>(run.next_sample("j1"));
    CHECK(first.sample->sample_id == ids[0]);
    CHECK(first.total == 2);
    for (auto d : kAllDimensions) {
      run.submit(judgment("j1", ids[0], d,
                          strict(run, ids[0], {System::kContextualized, System::kBaseline, System::kGroundTruth})));
    }
    auto second = std::get<SampleView>(run.next_sample("j1"));
    CHECK(second.sample->sample_id == ids[1]);
    CHECK(second.completed == 1);
    for (auto d : kAllDimensions) {
      run.submit(judgment("j1", ids[1], d,
                          strict(run, ids[1], {System::kBaseline, System::kGroundTruth, System::kContextualized})));
    }
    auto done = std::get<Done>(run.next_sample("j1"));
    CHECK(done.completed == 2);
    CHECK_THROWS_AS(run.next_sample("nobody"), NotFoundError);
  }

  TEST_CASE("submission validation") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(4), {"j1", "j2"}, small_config(2, 2));
    const auto& mine = run.groups()[0].sample_ids[0];
    const auto& theirs = run.groups()[1].sample_ids[0];
    const auto good = strict(run, mine, {System::kContextualized, System::kBaseline, System::kGroundTruth});

    CHECK_THROWS_AS(run.submit(judgment("ghost", mine, Dimension::kFluency, good)), NotFoundError);
    CHECK_THROWS_AS(run.submit(judgment("j1", "s-none", Dimension::kFluency, good)), NotFoundError);
    CHECK_THROWS_AS(run.submit(judgment("j1", theirs, Dimension::kFluency,
                                        strict(run, theirs, {System::kBaseline, System::kContextualized,
                                                             System::kGroundTruth}))),
                    ValidationError);
    auto partial = good;
    partial.pop_back();
    CHECK_THROWS_AS(run.submit(judgment("j1", mine, Dimension::kFluency, partial)), ValidationError);
    auto twice = good;
    twice.push_back(good[0]);
    CHECK_THROWS_AS(run.submit(judgment("j1", mine, Dimension::kFluency, twice)), ValidationError);
    auto empty_tier = good;
    empty_tier.push_back({});
    CHECK_THROWS_AS(run.submit(judgment("j1", mine, Dimension::kFluency, empty_tier)), ValidationError);
    CHECK(run.history().empty());
  }

  TEST_CASE("replacement and idempotent tokens") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(1), {"j1"}, small_config(1, 1));
    const std::string sid = "s0";
    auto r1 = run.submit(judgment("j1", sid, Dimension::kOverall,
                                  strict(run, sid, {System::kBaseline, System::kContextualized, System::kGroundTruth}),
                                  "tok-1"));
    CHECK(r1.seq == 1);
    CHECK_FALSE(r1.replaced);
    auto dup = run.submit(judgment("j1", sid, Dimension::kOverall,
                                   strict(run, sid, {System::kBaseline, System::kContextualized, System::kGroundTruth}),
                                   "tok-1"));
    CHECK(dup.duplicate);
    CHECK(dup.seq == 1);
    CHECK(run.history().size() == 1);

    auto r2 = run.submit(judgment("j1", sid, Dimension::kOverall,
                                  strict(run, sid, {System::kContextualized, System::kBaseline, System::kGroundTruth})));
    CHECK(r2.replaced);
    CHECK(r2.seq == 2);
    CHECK(run.history().size() == 2);
    REQUIRE(run.live().size() == 1);
    CHECK(run.live()[0].seq == 2);
    const auto t = run.tally(kVsBaseline);
    CHECK(t.cells.at(Dimension::kOverall) == TallyCell{1, 0, 0});
  }

  TEST_CASE("reference preference table is reproduced") {
    const auto run = reference_run(5);
    const auto table = fixtures::reference_table();
    const auto vb = run.tally(kVsBaseline);
    const auto vg = run.tally(kVsGroundTruth);
    for (auto d : kAllDimensions) {
      CAPTURE(to_string(d));
      const auto& b = table.vs_baseline.at(d);
      const auto& g = table.vs_ground_truth.at(d);
      CHECK(vb.cells.at(d) == TallyCell{b.ctx, b.other, b.tie});
      CHECK(vg.cells.at(d) == TallyCell{g.ctx, g.other, g.tie});
      CHECK(vb.cells.at(d).total() == 180);
      CHECK(vg.cells.at(d).total() == 180);
    }
  }

  TEST_CASE("tally is invariant to submission order") {
    auto base = EvalRun::create("p", fixtures::three_way_samples(60), fixtures::six_judges(), small_config(2, 30, 8));
    auto js = fixtures::judgments_for(base, fixtures::reference_table(), 8);
    std::mt19937_64 rng(99);
    auto a = base, b = base;
    for (const auto& j : js) a.submit(j);
    std::shuffle(js.begin(), js.end(), rng);
    for (const auto& j : js) b.submit(j);
    for (auto pair : {kVsBaseline, kVsGroundTruth, SystemPair{System::kBaseline, System::kGroundTruth}}) {
      for (auto d : kAllDimensions) CHECK(a.tally(pair).cells.at(d) == b.tally(pair).cells.at(d));
    }
  }

  TEST_CASE("swapping the pair swaps the counts") {
    const auto run = reference_run(6);
    const auto ab = run.tally(kVsBaseline);
    const auto ba = run.tally({System::kBaseline, System::kContextualized});
    for (auto d : kAllDimensions) {
      CHECK(ab.cells.at(d).prefer_a == ba.cells.at(d).prefer_b);
      CHECK(ab.cells.at(d).indistinguishable == ba.cells.at(d).indistinguishable);
    }
  }

  TEST_CASE("identical judges agree perfectly") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(6), {"j1", "j2", "j3"}, small_config(1, 6));
    std::mt19937_64 rng(4);
    for (const auto& sid : run.groups()[0].sample_ids) {
      for (auto d : kAllDimensions) {
        std::vector<System> order{System::kContextualized, System::kBaseline, System::kGroundTruth};
        std::shuffle(order.begin(), order.end(), rng);
        Ranking r;
        for (auto s : order) r.push_back({candidate_of(run, sid, s)});
        for (const auto* judge : {"j1", "j2", "j3"}) run.submit(judgment(judge, sid, d, r));
      }
    }
    const auto rep = run.agreement();
    REQUIRE(rep.groups.size() == 1);
    for (const auto& p : rep.groups[0].pairs) {
      REQUIRE(p.pooled);
      CHECK(*p.pooled == doctest::Approx(1.0));
      CHECK(p.overlap == 6);
    }
    CHECK(*rep.groups[0].mean_pooled == doctest::Approx(1.0));
  }

  TEST_CASE("single judge groups report a reason") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(2), {"j1", "j2"}, small_config(2, 1));
    const auto rep = run.agreement();
    CHECK(rep.groups.empty());
    CHECK_FALSE(rep.reason.empty());
  }

  TEST_CASE("leave-one-out exposes a contrarian judge") {
    auto run = EvalRun::create("r", fixtures::three_way_samples(10), {"j1", "j2", "j3"}, small_config(1, 10));
    std::mt19937_64 rng(7);
    for (const auto& sid : run.groups()[0].sample_ids) {
      for (auto d : kAllDimensions) {
        std::vector<System> order{System::kContextualized, System::kBaseline, System::kGroundTruth};
        std::shuffle(order.begin(), order.end(), rng);
        Ranking r, rev;
        for (auto s : order) r.push_back({candidate_of(run, sid, s)});
        rev.assign(r.rbegin(), r.rend());
        run.submit(judgment("j1", sid, d, r));
        run.submit(judgment("j2", sid, d, r));
        run.submit(judgment("j3", sid, d, rev));
      }
    }
    const auto g = run.agreement().groups.at(0);
    CHECK(*g.leave_one_out.at("j3") == doctest::Approx(1.0));
    CHECK(*g.leave_one_out.at("j1") == doctest::Approx(-1.0));
    CHECK(*g.leave_one_out.at("j3") > *g.mean_pooled);
    const auto without = run.agreement(std::nullopt, std::string("j3"));
    CHECK(*without.groups.at(0).mean_pooled == doctest::Approx(1.0));
  }

  TEST_CASE("run definition round-trips and replays its log") {
    const auto run = reference_run(2);
    auto back = EvalRun::from_json(nlohmann::json::parse(run.to_json().dump()));
    CHECK(back.to_json() == run.to_json());
    CHECK(back.history().empty());
    for (const auto& j : run.history()) back.replay(judgment_from_json(nlohmann::json::parse(to_json(j).dump())));
    CHECK_THROWS_AS(back.replay(run.history().front()), ValidationError);
    for (auto d : kAllDimensions) CHECK(back.tally(kVsBaseline).cells.at(d) == run.tally(kVsBaseline).cells.at(d));
  }

  TEST_CASE("store persists and reloads the log") {
    fixtures::TempDir dir;
    std::string id;
    {
      RunStore store(dir.path());
      id = store.create_run(fixtures::three_way_samples(60), fixtures::six_judges(), small_config(2, 30, 4));
      const auto js = store.read(id, [](const EvalRun& r) {
        return fixtures::judgments_for(r, fixtures::reference_table(), 4);
      });
      for (const auto& j : js) store.submit(id, j);
      CHECK_THROWS_AS(store.submit("missing", js[0]), NotFoundError);
    }
    RunStore again(dir.path());
    REQUIRE(again.run_ids() == std::vector<std::string>{id});
    const auto cells = again.read(id, [](const EvalRun& r) { return r.tally(kVsBaseline).cells; });
    const auto& want = fixtures::reference_table().vs_baseline;
    for (auto d : kAllDimensions) {
      CHECK(cells.at(d) == TallyCell{want.at(d).ctx, want.at(d).other, want.at(d).tie});
    }
    const auto offline = RunStore::load_run(dir.path() / "runs" / id);
    CHECK(offline.history().size() == 180 * 4);
  }

  TEST_CASE("judgment json") {
    auto j = judgment("j1", "s0", Dimension::kCoherence, {{"a", "b"}, {"c"}}, "t");
    j.seq = 4;
    j.timestamp = "2026-01-01T00:00:00Z";
    const auto back = judgment_from_json(nlohmann::json::parse(to_json(j).dump()));
    CHECK(back.ranking == j.ranking);
    CHECK(back.client_token == "t");
    CHECK(back.dimension == Dimension::kCoherence);
    CHECK_THROWS_AS(judgment_from_json(nlohmann::json::parse(R"({"judge_id":"j"})")), ValidationError);
  }
}
