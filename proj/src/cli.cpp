#include "citeforge/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "citeforge/autoeval.hpp"
#include "citeforge/corpus.hpp"
#include "citeforge/digest.hpp"
#include "citeforge/errors.hpp"
#include "citeforge/harness.hpp"
#include "citeforge/humaneval.hpp"
#include "citeforge/humaneval_server.hpp"
#include "citeforge/synthetic.hpp"
#include "citeforge/targets.hpp"
#include "citeforge/text.hpp"

#ifndef CITEFORGE_VERSION
#define CITEFORGE_VERSION "0.0.0"
#endif

namespace citeforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

ordered_json RunManifest::to_json() const {
  ordered_json in = ordered_json::array();
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      // Checkpoint directories hash their files in name order.
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) in.push_back({{"path", f.generic_string()}, {"sha256", sha256_file(f)}});
    } else {
      in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    }
  }
  ordered_json out = ordered_json::array();
  for (const auto& p : outputs) out.push_back(p.generic_string());
  return {{"tool", "citeforge"},
          {"version", CITEFORGE_VERSION},
          {"command", command},
          {"config", config},
          {"inputs", std::move(in)},
          {"outputs", std::move(out)}};
}

fs::path manifest_path(const fs::path& artifact) {
  if (fs::is_directory(artifact)) return artifact / "manifest.json";
  fs::path p = artifact;
  p += ".manifest.json";
  return p;
}

void write_manifest(const RunManifest& m, const fs::path& artifact) {
  const auto path = manifest_path(artifact);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << m.to_json().dump(2) << '\n';
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("CITEFORGE_DATA_DIR"); env && *env) return env;
  return "citeforge-data";
}

namespace {

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw NotFoundError("no such file: " + p.string());
}

ordered_json counts_json(const corpus::Corpus& c) {
  ordered_json parts = ordered_json::object();
  for (const auto& [p, n] : c.counts()) {
    parts[std::string(corpus::to_string(p))] = {{"papers", n.papers}, {"citations", n.citations}};
  }
  const auto merged = merge_training(c).totals();
  return {{"partitions", std::move(parts)},
          {"merged_training", {{"papers", merged.papers}, {"citations", merged.citations}}}};
}

// "<papers>:<citations>"
corpus::PartitionCounts parse_shape(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("");
    return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw ArgumentError("expected PAPERS:CITATIONS, got '" + s + "'");
  }
}

fs::path with_mode_suffix(const fs::path& out, targets::Mode mode) {
  fs::path p = out.parent_path() / out.stem();
  p += "." + std::string(targets::to_string(mode));
  p += out.extension().empty() ? fs::path(".jsonl") : out.extension();
  return p;
}

// Reference citations keyed by example id, from either a dataset file
// (target_text) or a generation output file (extracted_citation).
std::map<std::string, std::string> load_references(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("no such file: " + path.string());
  std::map<std::string, std::string> refs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError({{"line " + std::to_string(lineno), "", e.what()}});
    }
    std::string id = j.value("example_id", "");
    if (j.contains("target_text")) {
      const auto mode = targets::parse_mode(j.value("mode", ""));
      if (!mode) throw ValidationError({{id, "/mode", "unknown mode"}});
      refs[id] = targets::extract_citation(j["target_text"].get<std::string>(), *mode).extracted_citation;
    } else if (j.contains("extracted_citation")) {
      refs[id] = j["extracted_citation"].get<std::string>();
    } else {
      throw ValidationError({{id, "", "reference line has neither target_text nor extracted_citation"}});
    }
  }
  return refs;
}

void print_error(std::ostream& err, bool as_json, const std::string& kind, const std::string& message,
                 const std::vector<Issue>& issues = {}) {
  if (!as_json) {
    constexpr std::size_t kShown = 20;
    err << "error: " << message << '\n';
    for (std::size_t i = 0; i < std::min(kShown, issues.size()); ++i) {
      err << "  " << issues[i].record << " " << issues[i].path << ": " << issues[i].message << '\n';
    }
    if (issues.size() > kShown) err << "  ... and " << issues.size() - kShown << " more\n";
    return;
  }
  ordered_json list = ordered_json::array();
  for (const auto& is : issues) list.push_back({{"record", is.record}, {"path", is.path}, {"message", is.message}});
  err << ordered_json{{"error", {{"kind", kind}, {"message", message}, {"issues", std::move(list)}}}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"citeforge: citation text generation datasets, training harness and evaluation"};
  app.set_version_flag("--version", CITEFORGE_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();
  bool error_json = false;
  app.add_flag("--error-json", error_json, "Print errors as JSON on stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert a raw sentence-list export into a validated corpus");
  fs::path ingest_in, ingest_out;
  std::string ingest_format = "raw";
  ingest->add_option("input", ingest_in, "Raw export (JSONL)")->required();
  ingest->add_option("-o,--out", ingest_out, "Corpus output (JSONL)")->required();
  ingest->add_option("--format", ingest_format, "Input format")->check(CLI::IsMember({"raw", "corpus"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Write a templated synthetic corpus with a given shape");
  fs::path synth_out;
  std::string shape_train = "10:50", shape_distant = "0:0", shape_test = "0:0";
  std::uint64_t synth_seed = 1;
  synth->add_option("-o,--out", synth_out, "Corpus output (JSONL)")->required();
  synth->add_option("--train", shape_train, "PAPERS:CITATIONS in the train partition");
  synth->add_option("--distant", shape_distant, "PAPERS:CITATIONS in the distant partition");
  synth->add_option("--test", shape_test, "PAPERS:CITATIONS in the test partition");
  synth->add_option("--seed", synth_seed, "Random seed");

  // build
  auto* build = app.add_subcommand("build", "Build infilling and/or contextualized datasets from a corpus");
  fs::path build_corpus, build_out;
  std::string build_mode = "both", build_split = "all";
  targets::BuildOptions bopts;
  bool no_shuffle = false;
  build->add_option("corpus", build_corpus, "Corpus (JSONL)")->required();
  build->add_option("-o,--out", build_out, "Dataset output; with --mode both, .<mode> is inserted before the extension")
      ->required();
  build->add_option("--mode", build_mode, "Target format")->check(CLI::IsMember({"infilling", "contextualized", "both"}));
  build->add_option("--width", bopts.width, "Context sentences per side")->check(CLI::PositiveNumber);
  build->add_option("--budget", bopts.budget, "Input budget in code points");
  build->add_option("--seed", bopts.seed, "Shuffle seed");
  build->add_option("--split", build_split, "Which documents")->check(CLI::IsMember({"train", "test", "all"}));
  build->add_flag("--no-shuffle", no_shuffle, "Keep corpus order");

  // train
  auto* train = app.add_subcommand("train", "Train the encoder-decoder harness");
  fs::path train_path, valid_path, train_out;
  std::string preset = "tiny";
  auto cfg = harness::HarnessConfig::from_preset("tiny");
  train->add_option("dataset", train_path, "Training examples (JSONL)")->required();
  train->add_option("--valid", valid_path, "Validation examples (JSONL)");
  train->add_option("-o,--out", train_out, "Checkpoint directory")->required();
  train->add_option("--preset", preset, "Model size")->check(CLI::IsMember({"tiny", "small"}));
  auto* o_seed = train->add_option("--seed", cfg.seed, "Initialization and shuffle seed");
  auto* o_epochs = train->add_option("--epochs", cfg.epochs, "Training epochs");
  auto* o_batch = train->add_option("--batch-size", cfg.batch_size, "Examples per step");
  auto* o_lr = train->add_option("--lr", cfg.learning_rate, "Peak learning rate");
  auto* o_sched = train->add_option("--schedule", cfg.schedule, "constant, linear or inverse_sqrt");
  auto* o_warm = train->add_option("--warmup", cfg.warmup_steps, "Warmup steps");
  auto* o_in = train->add_option("--max-input-len", cfg.max_input_len, "Input token limit");
  auto* o_tgt = train->add_option("--max-target-len", cfg.max_target_len, "Target token limit");
  auto* o_dec = train->add_option("--max-decode-len", cfg.max_decode_len, "Decode token limit");
  auto* o_beam = train->add_option("--beam", cfg.beam_size, "Beam size stored in the checkpoint");
  auto* o_eval = train->add_option("--eval-every", cfg.eval_every, "Epochs between validation passes");
  auto* o_stop = train->add_option("--stop-at-exact", cfg.stop_at_train_exact,
                                   "Stop once training exact match reaches this value");
  std::string overflow = "error";
  auto* o_over = train->add_option("--target-overflow", overflow, "error or truncate")
                     ->check(CLI::IsMember({"error", "truncate"}));
  bool quiet = false;
  train->add_flag("-q,--quiet", quiet, "No per-epoch progress on stderr");

  // generate
  auto* gen = app.add_subcommand("generate", "Decode a dataset with a checkpoint");
  fs::path gen_ckpt, gen_data, gen_out;
  std::size_t gen_beam = 0, gen_max = 0;
  gen->add_option("--checkpoint", gen_ckpt, "Checkpoint directory")->required();
  gen->add_option("dataset", gen_data, "Examples (JSONL)")->required();
  gen->add_option("-o,--out", gen_out, "Outputs (JSONL)")->required();
  gen->add_option("--beam", gen_beam, "Override the checkpoint beam size");
  gen->add_option("--max-decode-len", gen_max, "Override the checkpoint decode limit");

  // eval
  auto* eval = app.add_subcommand("eval", "ROUGE and action-verb report");
  std::vector<std::string> eval_outputs;
  fs::path eval_refs, eval_out;
  std::vector<std::string> lexicon;
  eval->add_option("outputs", eval_outputs, "Generation outputs, optionally NAME=PATH")->required();
  eval->add_option("--refs", eval_refs, "Reference dataset or outputs (JSONL)")->required();
  eval->add_option("-o,--out", eval_out, "Report (JSON)")->required();
  eval->add_option("--lexicon", lexicon, "Action-verb lemmas")->delimiter(',');

  // serve
  auto* serve = app.add_subcommand("serve", "Run the human-evaluation HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  fs::path data_dir;
  fs::path run_config;
  serve->add_option("--serve-port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--data-dir", data_dir, "Run storage (default: $CITEFORGE_DATA_DIR)");
  serve->add_option("--run-config", run_config, "Create this run (POST /runs body) before serving");

  // report
  auto* report = app.add_subcommand("report", "Tallies and judge agreement for a stored run");
  std::string run_id;
  fs::path report_out;
  std::vector<std::string> pairs;
  report->add_option("run_id", run_id, "Run id")->required();
  report->add_option("--data-dir", data_dir, "Run storage (default: $CITEFORGE_DATA_DIR)");
  report->add_option("--pair", pairs, "A:B comparison (default: the run's configured ones)");
  report->add_option("-o,--out", report_out, "Also write the report here");

  for (auto* sub : {ingest, synth, build, train, gen, eval, serve, report}) sub->fallthrough();

  const bool want_json = std::any_of(argv, argv + argc, [](const char* a) { return std::string_view(a) == "--error-json"; });
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help / --version
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(CITEFORGE_VERSION) + "\n" : app.help());
      return kExitOk;
    }
    print_error(err, want_json, "argument", e.what());
    return kExitInvalid;
  }

  try {
    if (app.got_subcommand(ingest)) {
      require_file(ingest_in);
      const auto c = ingest_format == "raw" ? corpus::ingest_raw(ingest_in) : corpus::load_corpus(ingest_in);
      ensure_parent(ingest_out);
      corpus::save_corpus(c, ingest_out);
      RunManifest m{"ingest", {{"format", ingest_format}}, {ingest_in}, {ingest_out}};
      write_manifest(m, ingest_out);
      out << counts_json(c).dump(2) << '\n';
    } else if (app.got_subcommand(synth)) {
      synthetic::Options so;
      so.seed = synth_seed;
      so.shape[corpus::Partition::kTrain] = parse_shape(shape_train);
      so.shape[corpus::Partition::kDistant] = parse_shape(shape_distant);
      so.shape[corpus::Partition::kTest] = parse_shape(shape_test);
      const auto c = synthetic::generate(so);
      ensure_parent(synth_out);
      corpus::save_corpus(c, synth_out);
      RunManifest m{"synth",
                    {{"seed", synth_seed}, {"train", shape_train}, {"distant", shape_distant}, {"test", shape_test}},
                    {},
                    {synth_out}};
      write_manifest(m, synth_out);
      out << counts_json(c).dump(2) << '\n';
    } else if (app.got_subcommand(build)) {
      require_file(build_corpus);
      auto c = corpus::load_corpus(build_corpus);
      if (build_split == "train") c = corpus::merge_training(c);
      if (build_split == "test") c = corpus::test_split(c);
      bopts.shuffle = !no_shuffle;
      const ordered_json config{{"mode", build_mode},     {"width", bopts.width}, {"budget", bopts.budget},
                                {"seed", bopts.seed},     {"split", build_split}, {"shuffle", bopts.shuffle}};
      std::vector<std::pair<targets::Mode, std::vector<targets::GenerationExample>>> sets;
      targets::BuildReport rep;
      if (build_mode == "both") {
        auto paired = targets::build_paired(c, bopts);
        rep = std::move(paired.report);
        sets.emplace_back(targets::Mode::kInfilling, std::move(paired.infilling));
        sets.emplace_back(targets::Mode::kContextualized, std::move(paired.contextualized));
      } else {
        const auto mode = *targets::parse_mode(build_mode);
        sets.emplace_back(mode, targets::build_dataset(c, mode, bopts, &rep));
      }
      ordered_json summary{{"emitted", rep.emitted}, {"skipped", rep.skipped}, {"files", ordered_json::array()}};
      for (const auto& [mode, examples] : sets) {
        const auto path = build_mode == "both" ? with_mode_suffix(build_out, mode) : build_out;
        ensure_parent(path);
        targets::save_examples(examples, path);
        RunManifest m{"build", config, {build_corpus}, {path}};
        m.config["skipped"] = rep.skipped;
        write_manifest(m, path);
        summary["files"].push_back({{"mode", targets::to_string(mode)}, {"path", path.generic_string()},
                                    {"examples", examples.size()}});
      }
      for (const auto& f : rep.failures) err << "skipped " << f.record << ": " << f.message << '\n';
      out << summary.dump(2) << '\n';
    } else if (app.got_subcommand(train)) {
      require_file(train_path);
      auto c = harness::HarnessConfig::from_preset(preset);
      auto take = [](CLI::Option* o, auto& dst, const auto& src) {
        if (o->count() > 0) dst = src;
      };
      take(o_seed, c.seed, cfg.seed);
      take(o_epochs, c.epochs, cfg.epochs);
      take(o_batch, c.batch_size, cfg.batch_size);
      take(o_lr, c.learning_rate, cfg.learning_rate);
      take(o_sched, c.schedule, cfg.schedule);
      take(o_warm, c.warmup_steps, cfg.warmup_steps);
      take(o_in, c.max_input_len, cfg.max_input_len);
      take(o_tgt, c.max_target_len, cfg.max_target_len);
      take(o_dec, c.max_decode_len, cfg.max_decode_len);
      take(o_beam, c.beam_size, cfg.beam_size);
      take(o_eval, c.eval_every, cfg.eval_every);
      take(o_stop, c.stop_at_train_exact, cfg.stop_at_train_exact);
      if (o_over->count() > 0) {
        c.target_overflow = overflow == "truncate" ? harness::OverflowPolicy::kTruncate : harness::OverflowPolicy::kError;
      }
      const auto train_set = targets::load_examples(train_path);
      std::vector<targets::GenerationExample> valid;
      if (!valid_path.empty()) {
        require_file(valid_path);
        valid = targets::load_examples(valid_path);
      }
      harness::Progress progress;
      if (!quiet) {
        progress = [&err](const harness::LossRecord& r) {
          if (r.split != "train") err << "step " << r.step << " " << r.split << " loss " << r.loss << '\n';
        };
      }
      const auto ckpt = harness::train(c, train_set, valid, progress);
      harness::save_checkpoint(ckpt, train_out);
      RunManifest m{"train", c.to_json(), {train_path}, {train_out}};
      if (!valid_path.empty()) m.inputs.push_back(valid_path);
      write_manifest(m, train_out);
      out << ordered_json{{"checkpoint", train_out.generic_string()}, {"validation", ckpt.validation}}.dump(2) << '\n';
    } else if (app.got_subcommand(gen)) {
      require_file(gen_data);
      auto ckpt = harness::load_checkpoint(gen_ckpt);
      if (gen_beam > 0) ckpt.config.beam_size = gen_beam;
      if (gen_max > 0) ckpt.config.max_decode_len = gen_max;
      const auto examples = targets::load_examples(gen_data);
      std::vector<harness::BatchFailure> failures;
      const auto outputs = harness::generate_batch(ckpt, examples, &failures);
      ensure_parent(gen_out);
      targets::save_outputs(outputs, gen_out);
      RunManifest m{"generate",
                    {{"beam_size", ckpt.config.beam_size}, {"max_decode_len", ckpt.config.max_decode_len}},
                    {gen_ckpt, gen_data},
                    {gen_out}};
      write_manifest(m, gen_out);
      std::map<std::string, std::size_t> statuses;
      for (const auto& o : outputs) ++statuses[std::string(targets::to_string(o.status))];
      for (const auto& f : failures) err << "failed " << f.example_id << ": " << f.message << '\n';
      out << ordered_json{{"outputs", outputs.size()}, {"statuses", statuses}, {"failures", failures.size()}}.dump(2)
          << '\n';
    } else if (app.got_subcommand(eval)) {
      const auto refs = load_references(eval_refs);
      ordered_json rouge = ordered_json::object();
      std::map<std::string, std::vector<std::string>> by_system;
      RunManifest m{"eval", ordered_json::object(), {eval_refs}, {eval_out}};
      for (const auto& spec : eval_outputs) {
        const auto eq = spec.find('=');
        const std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
        const fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
        require_file(path);
        m.inputs.push_back(path);
        std::vector<autoeval::Candidate> cands;
        for (auto& o : targets::load_outputs(path)) {
          by_system[name].push_back(o.extracted_citation);
          cands.push_back({std::move(o.example_id), std::move(o.extracted_citation)});
        }
        rouge[name] = autoeval::to_json(autoeval::rouge_corpus(cands, refs));
      }
      for (const auto& [id, text] : refs) by_system["reference"].push_back(text);
      const auto verbs = lexicon.empty() ? autoeval::verb_frequency(by_system)
                                         : autoeval::verb_frequency(by_system, lexicon);
      m.config["lexicon"] = verbs.lexicon;
      ensure_parent(eval_out);
      const ordered_json report_json{{"rouge", rouge}, {"verbs", autoeval::to_json(verbs)}};
      {
        std::ofstream f(eval_out);
        if (!f) throw IoError("cannot write " + eval_out.string());
        f << report_json.dump(2) << '\n';
      }
      write_manifest(m, eval_out);
      ordered_json brief = ordered_json::object();
      for (auto it = rouge.begin(); it != rouge.end(); ++it) brief[it.key()] = it.value()["aggregate"];
      out << brief.dump(2) << '\n';
    } else if (app.got_subcommand(serve)) {
      const fs::path dir = data_dir.empty() ? default_data_dir() : data_dir;
      humaneval::RunStore store(dir);
      if (!run_config.empty()) {
        require_file(run_config);
        std::ifstream f(run_config);
        auto req = humaneval::parse_create_run(json::parse(f));
        const auto id = store.create_run(std::move(req.samples), std::move(req.judges), std::move(req.config));
        err << "created run " << id << '\n';
      }
      humaneval::HttpService service(store);
      const bool bound = port == 0 ? (port = service.bind_any_port(host)) > 0 : service.bind(host, port);
      if (!bound) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      err << "serving on http://" << host << ":" << port << " (data in " << dir.string() << ")\n";
      err.flush();
      service.listen_after_bind();
    } else if (app.got_subcommand(report)) {
      const fs::path dir = data_dir.empty() ? default_data_dir() : data_dir;
      const auto run = humaneval::RunStore::load_run(dir / "runs" / run_id);
      std::vector<humaneval::SystemPair> wanted;
      for (const auto& p : pairs) {
        const auto parsed = humaneval::parse_pair(p);
        if (!parsed) throw ArgumentError("pair must be A:B over ground_truth, baseline, contextualized");
        wanted.push_back(*parsed);
      }
      if (wanted.empty()) wanted = run.config().comparisons;
      ordered_json tallies = ordered_json::array();
      for (const auto& pr : wanted) {
        auto t = humaneval::to_json(run.tally(pr));
        t["pair"] = std::string(humaneval::to_string(pr.first)) + ":" + std::string(humaneval::to_string(pr.second));
        tallies.push_back(std::move(t));
      }
      const ordered_json rep{{"run_id", run.id()},
                             {"judgments_logged", run.history().size()},
                             {"tallies", std::move(tallies)},
                             {"agreement", humaneval::to_json(run.agreement())}};
      if (!report_out.empty()) {
        ensure_parent(report_out);
        std::ofstream f(report_out);
        if (!f) throw IoError("cannot write " + report_out.string());
        f << rep.dump(2) << '\n';
        RunManifest m{"report", {{"run_id", run_id}}, {dir / "runs" / run_id}, {report_out}};
        write_manifest(m, report_out);
      }
      out << rep.dump(2) << '\n';
    }
  } catch (const ValidationError& e) {
    print_error(err, error_json || want_json, e.kind(), e.what(), e.issues());
    return kExitInvalid;
  } catch (const Error& e) {
    print_error(err, error_json || want_json, e.kind(), e.what());
    return kExitInvalid;
  } catch (const json::exception& e) {
    print_error(err, error_json || want_json, "malformed_json", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    print_error(err, error_json || want_json, "internal", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"citeforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace citeforge::cli
