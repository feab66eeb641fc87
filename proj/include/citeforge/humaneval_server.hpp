#pragma once

#include <memory>
#include <string>

#include "citeforge/humaneval.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace citeforge::humaneval {

/// Judge-facing view of a sample: candidate ids and texts in display order.
/// Never includes system labels.
nlohmann::ordered_json sample_payload(const EvalSample& sample);

/// Body of `POST /runs`. Throws ValidationError on malformed input.
struct CreateRunRequest {
  std::vector<SampleSpec> samples;
  std::vector<std::string> judges;
  RunConfig config;
};
CreateRunRequest parse_create_run(const nlohmann::json& body);

/// HTTP+JSON front end over a RunStore.
///
///   POST /runs                         create a run
///   GET  /runs/{id}                    assignment summary
///   GET  /runs/{id}/next?judge=J       next pending sample or {"status":"done"}
///   POST /runs/{id}/judgments          submit one judgment
///   GET  /runs/{id}/judgments?judge=J&history=1
///   GET  /runs/{id}/tally?pair=A:B
///   GET  /runs/{id}/agreement?pair=A:B&exclude=J
class HttpService {
 public:
  explicit HttpService(RunStore& store);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds to a free port on `host` and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  bool listen_after_bind();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  RunStore& store_;
  std::unique_ptr<httplib::Server> server_;
  void install_routes();
};

}  // namespace citeforge::humaneval
