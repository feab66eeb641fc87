#include "citeforge/humaneval_server.hpp"

#include "httplib.h"

namespace citeforge::humaneval {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json sample_payload(const EvalSample& sample) {
  ordered_json cands = ordered_json::array();
  for (auto idx : sample.display_order) {
    const auto& c = sample.candidates[idx];
    cands.push_back({{"candidate_id", c.candidate_id}, {"text", c.text}});
  }
  return {{"sample_id", sample.sample_id}, {"input", sample.input}, {"candidates", std::move(cands)}};
}

CreateRunRequest parse_create_run(const json& body) {
  CreateRunRequest req;
  std::vector<Issue> issues;
  auto fail = [&](std::string path, std::string msg) { issues.push_back({"run", std::move(path), std::move(msg)}); };
  if (!body.is_object()) throw ValidationError({{"run", "", "expected JSON object"}});

  if (auto it = body.find("judges"); it != body.end() && it->is_array()) {
    for (const auto& j : *it) {
      if (j.is_string()) {
        req.judges.push_back(j.get<std::string>());
      } else {
        fail("/judges", "judge ids must be strings");
      }
    }
  } else {
    fail("/judges", "expected array of judge ids");
  }

  auto uint_field = [&](const char* key, auto& dst) {
    if (auto it = body.find(key); it != body.end()) {
      if (it->is_number_unsigned()) {
        dst = it->get<std::decay_t<decltype(dst)>>();
      } else {
        fail(std::string("/") + key, "expected non-negative integer");
      }
    }
  };
  uint_field("group_count", req.config.group_count);
  uint_field("samples_per_group", req.config.samples_per_group);
  uint_field("seed", req.config.seed);

  if (auto it = body.find("comparisons"); it != body.end()) {
    req.config.comparisons.clear();
    if (!it->is_array()) fail("/comparisons", "expected array of pairs");
    for (const auto& c : *it) {
      std::optional<SystemPair> p;
      if (c.is_string()) {
        p = parse_pair(c.get<std::string>());
      } else if (c.is_array() && c.size() == 2 && c[0].is_string() && c[1].is_string()) {
        p = parse_pair(c[0].get<std::string>() + ":" + c[1].get<std::string>());
      }
      if (p) {
        req.config.comparisons.push_back(*p);
      } else {
        fail("/comparisons", "invalid comparison");
      }
    }
  }

  if (auto it = body.find("samples"); it != body.end() && it->is_array()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& sj = (*it)[i];
      const std::string path = "/samples/" + std::to_string(i);
      if (!sj.is_object() || !sj.contains("sample_id") || !sj["sample_id"].is_string() ||
          !sj.contains("candidates") || !sj["candidates"].is_array()) {
        fail(path, "sample needs sample_id and candidates");
        continue;
      }
      SampleSpec spec;
      spec.sample_id = sj["sample_id"].get<std::string>();
      spec.input = sj.value("input", std::string());
      for (const auto& cj : sj["candidates"]) {
        std::optional<System> sys;
        if (cj.is_object() && cj.contains("system") && cj["system"].is_string()) {
          sys = parse_system(cj["system"].get<std::string>());
        }
        if (!sys || !cj.contains("text") || !cj["text"].is_string()) {
          fail(path + "/candidates", "candidate needs a known system and text");
          continue;
        }
        spec.candidates.emplace_back(*sys, cj["text"].get<std::string>());
      }
      req.samples.push_back(std::move(spec));
    }
  } else {
    fail("/samples", "expected array of samples");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return req;
}

namespace {

ordered_json error_body(const Error& e) {
  ordered_json err{{"kind", e.kind()}, {"message", e.what()}};
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    ordered_json issues = ordered_json::array();
    for (const auto& is : v->issues()) issues.push_back({{"path", is.path}, {"message", is.message}});
    err["issues"] = std::move(issues);
  }
  return {{"error", std::move(err)}};
}

void send(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send(res, 404, error_body(e));
  } catch (const Error& e) {
    send(res, 400, error_body(e));
  } catch (const json::exception& e) {
    send(res, 400, {{"error", {{"kind", "malformed_json"}, {"message", e.what()}}}});
  } catch (const std::exception& e) {
    send(res, 500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}});
  }
}

std::optional<SystemPair> pair_param(const httplib::Request& req) {
  if (!req.has_param("pair")) return std::nullopt;
  auto p = parse_pair(req.get_param_value("pair"));
  if (!p) throw ArgumentError("pair must be two distinct systems written as A:B");
  return p;
}

ordered_json progress(std::size_t completed, std::size_t total) {
  return {{"completed", completed}, {"total", total}};
}

}  // namespace

HttpService::HttpService(RunStore& store) : store_(store), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, {{"ok", true}}); });

  s.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto parsed = parse_create_run(json::parse(req.body));
      const std::string id = store_.create_run(std::move(parsed.samples), std::move(parsed.judges),
                                               std::move(parsed.config));
      const auto expected = store_.read(id, [](const EvalRun& r) { return r.expected_per_dimension(); });
      send(res, 201, {{"run_id", id}, {"expected_judgments_per_dimension", expected}});
    });
  });

  s.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      store_.read(req.matches[1].str(), [&](const EvalRun& run) {
        ordered_json groups = ordered_json::array();
        for (const auto& g : run.groups()) {
          groups.push_back({{"judges", g.judges}, {"sample_ids", g.sample_ids}});
        }
        send(res, 200,
             {{"run_id", run.id()},
              {"groups", std::move(groups)},
              {"dimensions", {"fluency", "relevance", "coherence", "overall"}},
              {"expected_judgments_per_dimension", run.expected_per_dimension()},
              {"judgments_logged", run.history().size()}});
        return 0;
      });
    });
  });

  s.Get(R"(/runs/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("judge")) throw ArgumentError("missing judge parameter");
      const std::string judge = req.get_param_value("judge");
      store_.read(req.matches[1].str(), [&](const EvalRun& run) {
        const auto next = run.next_sample(judge);
        if (const auto* done = std::get_if<Done>(&next)) {
          send(res, 200, {{"status", "done"}, {"progress", progress(done->completed, done->total)}});
        } else {
          const auto& view = std::get<SampleView>(next);
          send(res, 200,
               {{"status", "sample"},
                {"sample", sample_payload(*view.sample)},
                {"dimensions", {"fluency", "relevance", "coherence", "overall"}},
                {"progress", progress(view.completed, view.total)}});
        }
        return 0;
      });
    });
  });

  s.Post(R"(/runs/([^/]+)/judgments)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Judgment j = judgment_from_json(json::parse(req.body));
      j.seq = 0;
      const auto r = store_.submit(req.matches[1].str(), std::move(j));
      send(res, 200, {{"accepted", true}, {"seq", r.seq}, {"replaced", r.replaced}, {"duplicate", r.duplicate}});
    });
  });

  s.Get(R"(/runs/([^/]+)/judgments)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const bool history = req.has_param("history") && req.get_param_value("history") != "0";
      const std::string judge = req.has_param("judge") ? req.get_param_value("judge") : "";
      store_.read(req.matches[1].str(), [&](const EvalRun& run) {
        ordered_json list = ordered_json::array();
        const auto rows = history ? run.history() : run.live();
        for (const auto& j : rows) {
          if (judge.empty() || j.judge_id == judge) list.push_back(to_json(j));
        }
        send(res, 200, {{"judgments", std::move(list)}});
        return 0;
      });
    });
  });

  s.Get(R"(/runs/([^/]+)/tally)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto pair = pair_param(req).value_or(SystemPair{System::kContextualized, System::kBaseline});
      store_.read(req.matches[1].str(), [&](const EvalRun& run) {
        send(res, 200, to_json(run.tally(pair)));
        return 0;
      });
    });
  });

  s.Get(R"(/runs/([^/]+)/agreement)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto pair = pair_param(req);
      std::optional<std::string> exclude;
      if (req.has_param("exclude")) exclude = req.get_param_value("exclude");
      store_.read(req.matches[1].str(), [&](const EvalRun& run) {
        send(res, 200, to_json(run.agreement(pair, exclude)));
        return 0;
      });
    });
  });
}

int HttpService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_) server_->stop();
}

bool HttpService::is_running() const { return server_->is_running(); }

void HttpService::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace citeforge::humaneval
