#include "citeforge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "citeforge/digest.hpp"

namespace citeforge::harness {

using nlohmann::json;
using nlohmann::ordered_json;
using targets::GenerationExample;
using targets::Mode;

namespace {

std::string_view to_string(OverflowPolicy p) { return p == OverflowPolicy::kError ? "error" : "truncate"; }

OverflowPolicy parse_policy(std::string_view s) {
  if (s == "error") return OverflowPolicy::kError;
  if (s == "truncate") return OverflowPolicy::kTruncate;
  throw ArgumentError("target_overflow must be error or truncate");
}

nn::TransformerDims dims_for(const HarnessConfig& c, std::size_t vocab) {
  return {static_cast<int>(vocab), c.d_model, c.heads, c.ff, c.encoder_layers, c.decoder_layers};
}

}  // namespace

HarnessConfig HarnessConfig::from_preset(std::string_view name) {
  HarnessConfig c;
  if (name == "tiny") return c;
  if (name == "small") {
    c.preset = "small";
    c.d_model = 128;
    c.heads = 4;
    c.ff = 512;
    c.encoder_layers = 3;
    c.decoder_layers = 3;
    c.learning_rate = 1e-3f;
    c.warmup_steps = 200;
    c.max_input_len = 1024;
    c.epochs = 50;
    return c;
  }
  throw ArgumentError("unknown preset '" + std::string(name) + "' (expected tiny or small)");
}

void HarnessConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw ArgumentError(msg);
  };
  need(d_model > 0 && heads > 0 && d_model % heads == 0, "d_model must be a positive multiple of heads");
  need(ff > 0, "ff must be positive");
  need(encoder_layers >= 1 && decoder_layers >= 1, "at least one encoder and one decoder layer");
  need(min_piece_count >= 1, "min_piece_count must be >= 1");
  need(max_input_len >= 1 && max_target_len >= 1, "token limits must be positive");
  need(beam_size >= 1, "beam_size must be positive");
  need(batch_size >= 1, "batch_size must be positive");
  need(learning_rate > 0.0f, "learning_rate must be positive");
  need(clip_norm > 0.0f, "clip_norm must be positive");
  need(eval_every >= 1, "eval_every must be positive");
  need(schedule == "constant" || schedule == "linear" || schedule == "inverse_sqrt",
       "schedule must be constant, linear or inverse_sqrt");
}

ordered_json HarnessConfig::to_json() const {
  return {{"preset", preset},
          {"d_model", d_model},
          {"heads", heads},
          {"ff", ff},
          {"encoder_layers", encoder_layers},
          {"decoder_layers", decoder_layers},
          {"min_piece_count", min_piece_count},
          {"max_input_len", max_input_len},
          {"max_target_len", max_target_len},
          {"target_overflow", to_string(target_overflow)},
          {"max_decode_len", max_decode_len},
          {"beam_size", beam_size},
          {"seed", seed},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"warmup_steps", warmup_steps},
          {"schedule", schedule},
          {"clip_norm", clip_norm},
          {"eval_every", eval_every},
          {"stop_at_train_exact", stop_at_train_exact}};
}

HarnessConfig HarnessConfig::from_json(const json& j) {
  HarnessConfig c = from_preset(j.value("preset", std::string("tiny")));
  auto get = [&](const char* key, auto& dst) {
    if (auto it = j.find(key); it != j.end()) dst = it->get<std::decay_t<decltype(dst)>>();
  };
  get("d_model", c.d_model);
  get("heads", c.heads);
  get("ff", c.ff);
  get("encoder_layers", c.encoder_layers);
  get("decoder_layers", c.decoder_layers);
  get("min_piece_count", c.min_piece_count);
  get("max_input_len", c.max_input_len);
  get("max_target_len", c.max_target_len);
  if (auto it = j.find("target_overflow"); it != j.end()) c.target_overflow = parse_policy(it->get<std::string>());
  get("max_decode_len", c.max_decode_len);
  get("beam_size", c.beam_size);
  get("seed", c.seed);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("learning_rate", c.learning_rate);
  get("warmup_steps", c.warmup_steps);
  get("schedule", c.schedule);
  get("clip_norm", c.clip_norm);
  get("eval_every", c.eval_every);
  get("stop_at_train_exact", c.stop_at_train_exact);
  return c;
}

std::string HarnessConfig::fingerprint() const {
  const ordered_json shape{{"d_model", d_model},
                           {"heads", heads},
                           {"ff", ff},
                           {"encoder_layers", encoder_layers},
                           {"decoder_layers", decoder_layers},
                           {"min_piece_count", min_piece_count},
                           {"max_input_len", max_input_len},
                           {"max_target_len", max_target_len}};
  return sha256_hex(shape.dump());
}

namespace {

struct Encoded {
  std::vector<int> src;
  std::vector<int> tgt;
};

std::vector<int> encode_source(const Vocabulary& vocab, std::string_view text, std::size_t max_len,
                               std::string_view id) {
  auto ids = vocab.encode(text);
  ids.push_back(Vocabulary::kEos);
  if (ids.size() > max_len) {
    throw ArgumentError("input" + (id.empty() ? std::string() : " of " + std::string(id)) + " has " +
                        std::to_string(ids.size()) + " tokens, max_input_len is " + std::to_string(max_len));
  }
  return ids;
}

class Adam {
 public:
  explicit Adam(const nn::ParameterSet& params) : m_(params), v_(params) {}

  void step(nn::ParameterSet& params, const nn::GradStore& grads, float lr) {
    ++t_;
    const float c1 = 1.0f - std::pow(kBeta1, static_cast<float>(t_));
    const float c2 = 1.0f - std::pow(kBeta2, static_cast<float>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0f - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0f - kBeta2) * grads[i].cwiseAbs2();
      params[i].value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.98f;
  static constexpr float kEps = 1e-9f;
  nn::GradStore m_;
  nn::GradStore v_;
  std::size_t t_ = 0;
};

float learning_rate(const HarnessConfig& c, std::size_t step, std::size_t total) {
  const auto s = static_cast<float>(step);
  const auto w = static_cast<float>(c.warmup_steps);
  if (c.warmup_steps > 0 && step <= c.warmup_steps) return c.learning_rate * s / w;
  if (c.schedule == "linear") {
    const float span = static_cast<float>(std::max<std::size_t>(total - c.warmup_steps, 1));
    return c.learning_rate * std::max(0.0f, 1.0f - (s - w) / span);
  }
  if (c.schedule == "inverse_sqrt") return c.learning_rate * std::sqrt(std::max(w, 1.0f) / s);
  return c.learning_rate;
}

double mean_loss(const nn::Transformer& model, const std::vector<Encoded>& data) {
  double total = 0.0;
  for (const auto& e : data) {
    nn::Graph g;
    total += g.value(model.loss(g, e.src, e.tgt, Vocabulary::kBos))(0, 0);
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

std::vector<nn::Matrix> snapshot(const nn::ParameterSet& params) {
  std::vector<nn::Matrix> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(params[i].value);
  return out;
}

void restore(nn::ParameterSet& params, const std::vector<nn::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

}  // namespace

Checkpoint train(const HarnessConfig& config, const std::vector<GenerationExample>& train_set,
                 const std::vector<GenerationExample>& validation, const Progress& progress) {
  config.validate();
  if (train_set.empty()) throw ArgumentError("training set is empty");
  const Mode mode = train_set.front().mode;
  auto same_mode = [&](const GenerationExample& e) { return e.mode == mode; };
  if (!std::all_of(train_set.begin(), train_set.end(), same_mode) ||
      !std::all_of(validation.begin(), validation.end(), same_mode)) {
    throw ArgumentError("examples mix infilling and contextualized modes");
  }

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.mode = mode;
  std::vector<std::string> texts;
  for (const auto& e : train_set) {
    texts.push_back(e.input_text);
    texts.push_back(e.target_text);
  }
  ckpt.vocab = Vocabulary::build(texts, config.min_piece_count);

  auto encode_all = [&](const std::vector<GenerationExample>& xs) {
    std::vector<Encoded> out;
    for (const auto& e : xs) {
      Encoded enc;
      enc.src = encode_source(ckpt.vocab, e.input_text, config.max_input_len, e.example_id);
      enc.tgt = ckpt.vocab.encode(e.target_text);
      enc.tgt.push_back(Vocabulary::kEos);
      if (enc.tgt.size() > config.max_target_len) {
        if (config.target_overflow == OverflowPolicy::kError) {
          throw ArgumentError("target of " + e.example_id + " has " + std::to_string(enc.tgt.size()) +
                              " tokens, max_target_len is " + std::to_string(config.max_target_len));
        }
        enc.tgt.resize(config.max_target_len);
        ++ckpt.truncated_targets;
      }
      out.push_back(std::move(enc));
    }
    return out;
  };
  const auto train_data = encode_all(train_set);
  const auto val_data = encode_all(validation);

  auto model = std::make_shared<nn::Transformer>(dims_for(config, ckpt.vocab.size()), config.seed);
  nn::GradStore grads(model->params());
  Adam adam(model->params());
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  const std::size_t steps_per_epoch = (train_data.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  auto emit = [&](LossRecord r) {
    if (progress) progress(r);
    ckpt.log.push_back(std::move(r));
  };

  std::optional<double> best;
  std::vector<nn::Matrix> best_weights = snapshot(model->params());
  std::size_t best_step = 0;
  std::optional<double> last_exact;
  auto evaluate = [&](std::size_t step) {
    const bool has_val = !val_data.empty();
    const double loss = mean_loss(*model, has_val ? val_data : train_data);
    emit({step, has_val ? "validation" : "train_eval", loss});
    if (!best || loss < *best) {
      best = loss;
      best_weights = snapshot(model->params());
      best_step = step;
    }
  };

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  evaluate(0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const float inv = 1.0f / static_cast<float>(end - b);
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t i = b; i < end; ++i) {
        const auto& e = train_data[order[i]];
        nn::Graph g(&grads);
        const nn::Var l = g.scale(model->loss(g, e.src, e.tgt, Vocabulary::kBos), inv);
        batch_loss += g.value(l)(0, 0);
        g.backward(l);
      }
      const double norm = std::sqrt(grads.squared_norm());
      if (norm > config.clip_norm) grads.scale(static_cast<float>(config.clip_norm / norm));
      ++step;
      adam.step(model->params(), grads, learning_rate(config, step, total_steps));
      emit({step, "train", batch_loss});
    }
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      evaluate(step);
      if (config.stop_at_train_exact > 0.0) {
        Checkpoint probe{config, mode, ckpt.vocab, model, step, {}, {}, 0};
        last_exact = exact_match(probe, train_set);
        if (*last_exact >= config.stop_at_train_exact) break;
      }
    }
  }

  restore(model->params(), best_weights);
  ckpt.model = std::move(model);
  ckpt.step = best_step;
  ckpt.validation = {{"split", val_data.empty() ? "train" : "validation"}, {"loss", *best}, {"step", best_step}};
  if (last_exact) ckpt.validation["last_train_exact_match"] = *last_exact;
  ckpt.validation["truncated_targets"] = ckpt.truncated_targets;
  return ckpt;
}

std::string generate(const Checkpoint& ckpt, std::string_view input_text) {
  if (!ckpt.model) throw ArgumentError("checkpoint has no model");
  const auto src = encode_source(ckpt.vocab, input_text, ckpt.config.max_input_len, "");
  const auto ids = ckpt.model->generate(src, Vocabulary::kBos, Vocabulary::kEos, ckpt.config.max_decode_len,
                                        ckpt.config.beam_size);
  return ckpt.vocab.decode(ids);
}

std::vector<targets::GenerationOutput> generate_batch(const Checkpoint& ckpt,
                                                      const std::vector<GenerationExample>& examples,
                                                      std::vector<BatchFailure>* failures) {
  std::vector<targets::GenerationOutput> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    std::string raw;
    try {
      raw = generate(ckpt, e.input_text);
    } catch (const std::exception& ex) {
      if (failures) failures->push_back({e.example_id, ex.what()});
    }
    out.push_back(targets::extract_citation(raw, ckpt.mode, e.example_id));
  }
  return out;
}

double exact_match(const Checkpoint& ckpt, const std::vector<GenerationExample>& examples) {
  if (examples.empty()) return 0.0;
  const auto outputs = generate_batch(ckpt, examples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto ref = targets::extract_citation(examples[i].target_text, examples[i].mode);
    if (outputs[i].status == targets::ExtractionStatus::kOk &&
        outputs[i].extracted_citation == ref.extracted_citation) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  if (!ckpt.model) throw ArgumentError("checkpoint has no model");
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name, std::ios::openmode m = std::ios::out) {
    std::ofstream f(dir / name, m);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    ordered_json meta{{"fingerprint", ckpt.config.fingerprint()},
                      {"mode", targets::to_string(ckpt.mode)},
                      {"step", ckpt.step},
                      {"validation", ckpt.validation},
                      {"config", ckpt.config.to_json()}};
    open("config.json") << meta.dump(2) << '\n';
  }
  open("vocab.json") << ckpt.vocab.to_json().dump() << '\n';
  {
    auto f = open("weights.bin", std::ios::out | std::ios::binary);
    ckpt.model->write_weights(f);
  }
  auto f = open("metrics.jsonl");
  for (const auto& r : ckpt.log) {
    f << ordered_json{{"step", r.step}, {"split", r.split}, {"loss", r.loss}}.dump() << '\n';
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  auto read_json = [&](const char* name) {
    std::ifstream f(dir / name);
    if (!f) throw IoError("missing " + (dir / name).string());
    try {
      return json::parse(f);
    } catch (const json::exception& e) {
      throw IoError((dir / name).string() + ": " + e.what());
    }
  };
  const json meta = read_json("config.json");
  Checkpoint ckpt;
  try {
    ckpt.config = HarnessConfig::from_json(meta.at("config"));
    if (meta.at("fingerprint").get<std::string>() != ckpt.config.fingerprint()) {
      throw IoError("config fingerprint mismatch in " + dir.string());
    }
    const auto mode = targets::parse_mode(meta.at("mode").get<std::string>());
    if (!mode) throw IoError("unknown mode in " + dir.string());
    ckpt.mode = *mode;
    ckpt.step = meta.at("step").get<std::size_t>();
    ckpt.validation = meta.at("validation");
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/config.json: " + e.what());
  }
  ckpt.vocab = Vocabulary::from_json(read_json("vocab.json"));
  ckpt.model = std::make_shared<nn::Transformer>(dims_for(ckpt.config, ckpt.vocab.size()), ckpt.config.seed);
  std::ifstream w(dir / "weights.bin", std::ios::binary);
  if (!w) throw IoError("missing " + (dir / "weights.bin").string());
  try {
    ckpt.model->read_weights(w);
  } catch (const std::runtime_error& e) {
    throw IoError(std::string(e.what()) + " (" + dir.string() + ")");
  }
  if (std::ifstream m(dir / "metrics.jsonl"); m) {
    std::string line;
    while (std::getline(m, line)) {
      if (line.empty()) continue;
      const auto r = json::parse(line);
      ckpt.log.push_back({r.at("step").get<std::size_t>(), r.at("split").get<std::string>(), r.at("loss").get<double>()});
    }
  }
  return ckpt;
}

}  // namespace citeforge::harness
