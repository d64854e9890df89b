#include "stuc/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace stuc {
namespace {

using nlohmann::json;
using Setter = std::function<void(const json&)>;

void apply(const json& obj, const std::string& where,
           const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + key + "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::string to_string(DataKind k) {
  switch (k) {
    case DataKind::kTwoMoons: return "two_moons";
    case DataKind::kBlobs: return "blobs";
    case DataKind::kTinyImages: return "tiny_images";
  }
  return "unknown";
}

DataKind data_kind_from_string(const std::string& s) {
  if (s == "two_moons") return DataKind::kTwoMoons;
  if (s == "blobs") return DataKind::kBlobs;
  if (s == "tiny_images") return DataKind::kTinyImages;
  throw ConfigError("unknown data kind '" + s + "'");
}

}  // namespace

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kFull: return "satpl+uscl";
    case TrainMode::kFixedThreshold: return "fixed-threshold";
    case TrainMode::kSatplOnly: return "satpl-only";
    case TrainMode::kUsclOnly: return "uscl-only";
  }
  return "unknown";
}

TrainMode mode_from_string(const std::string& name) {
  if (name == "satpl+uscl" || name == "full") return TrainMode::kFull;
  if (name == "fixed-threshold") return TrainMode::kFixedThreshold;
  if (name == "satpl-only") return TrainMode::kSatplOnly;
  if (name == "uscl-only") return TrainMode::kUsclOnly;
  throw ConfigError("unknown mode '" + name + "'");
}

bool uses_adaptive_threshold(TrainMode m) {
  return m == TrainMode::kFull || m == TrainMode::kSatplOnly;
}

bool uses_contrastive(TrainMode m) {
  return m == TrainMode::kFull || m == TrainMode::kUsclOnly;
}

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  batch.validate();
  if (batch.num_classes != data.classes) {
    throw ConfigError("batch.classes disagrees with data.classes");
  }
  if (batch.embed_dim != model.embed_dim) {
    throw ConfigError("batch.embed_dim disagrees with model.embed_dim");
  }
  if (!(threshold_decay > 0.0 && threshold_decay < 1.0)) {
    throw ConfigError("threshold_decay must lie in (0, 1)");
  }
  if (!(fixed_threshold >= 0.0 && fixed_threshold <= 1.0)) {
    throw ConfigError("fixed_threshold must lie in [0, 1]");
  }
  if (lambda_u < 0.0) throw ConfigError("lambda_u must be >= 0");
  if (lambda_c0 < 0.0) throw ConfigError("lambda_c0 must be >= 0");
  if (!(eps1 >= 0.0 && eps1 < 1.0) || !(eps2 >= 0.0 && eps2 < 1.0)) {
    throw ConfigError("eps1 and eps2 must lie in [0, 1)");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw ConfigError("ema_decay must lie in [0, 1]");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (data.classes < 2) throw ConfigError("data.classes must be >= 2");
  if (data.kind == DataKind::kTwoMoons && data.classes != 2) {
    throw ConfigError("two_moons has exactly 2 classes");
  }
  if (data.labels_per_class < 1) throw ConfigError("labels_per_class must be >= 1");
  if (data.n < data.labels_per_class * data.classes) {
    throw ConfigError("data.n is smaller than the labeled set");
  }
  if (data.distractor_fraction < 0.0 || data.distractor_fraction > 1.0) {
    throw ConfigError("distractor_fraction must lie in [0, 1]");
  }
  if (augment.weak_noise < 0.0 || augment.strong_noise < augment.weak_noise) {
    throw ConfigError("strong_noise must be >= weak_noise >= 0");
  }
  if (augment.strong_dropout < 0.0 || augment.strong_dropout > 1.0 ||
      augment.flip_prob < 0.0 || augment.flip_prob > 1.0) {
    throw ConfigError("augmentation probability outside [0, 1]");
  }
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["iterations"] = c.iterations;
  j["batch"] = {{"labeled", c.batch.labeled_batch}, {"mu", c.batch.mu},
                {"classes", c.batch.num_classes}, {"embed_dim", c.batch.embed_dim}};
  j["model"] = {{"hidden", c.model.hidden}, {"embed_dim", c.model.embed_dim},
                {"activation", c.model.activation}};
  j["data"] = {{"kind", to_string(c.data.kind)}, {"n", c.data.n}, {"noise", c.data.noise},
               {"classes", c.data.classes}, {"spreads", c.data.spreads},
               {"dim", c.data.dim}, {"path", c.data.path},
               {"image_side", c.data.image_side},
               {"labels_per_class", c.data.labels_per_class}, {"test_n", c.data.test_n},
               {"distractor_fraction", c.data.distractor_fraction}};
  j["augment"] = {{"weak_noise", c.augment.weak_noise},
                  {"strong_noise", c.augment.strong_noise},
                  {"strong_dropout", c.augment.strong_dropout},
                  {"flip_prob", c.augment.flip_prob},
                  {"max_shift", c.augment.max_shift},
                  {"image_noise", c.augment.image_noise},
                  {"erase_size", c.augment.erase_size}};
  j["mode"] = to_string(c.mode);
  j["threshold_decay"] = c.threshold_decay;
  j["fixed_threshold"] = c.fixed_threshold;
  j["status_window"] = c.status_window;
  j["lambda_u"] = c.lambda_u;
  j["lambda_c0"] = c.lambda_c0;
  j["eps1"] = c.eps1;
  j["eps2"] = c.eps2;
  j["temperature"] = c.temperature;
  j["negatives"] = c.negatives;
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["cosine_lr"] = c.cosine_lr;
  j["ema_decay"] = c.ema_decay;
  j["eval_interval"] = c.eval_interval;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  TrainConfig c;
  std::string mode = to_string(c.mode);
  std::string kind = to_string(c.data.kind);
  apply(root, "",
        {{"iterations", set(c.iterations)},
         {"batch",
          [&](const json& v) {
            apply(v, "batch",
                  {{"labeled", set(c.batch.labeled_batch)}, {"mu", set(c.batch.mu)},
                   {"classes", set(c.batch.num_classes)},
                   {"embed_dim", set(c.batch.embed_dim)}});
          }},
         {"model",
          [&](const json& v) {
            apply(v, "model",
                  {{"hidden", set(c.model.hidden)}, {"embed_dim", set(c.model.embed_dim)},
                   {"activation", set(c.model.activation)}});
          }},
         {"data",
          [&](const json& v) {
            apply(v, "data",
                  {{"kind", set(kind)}, {"n", set(c.data.n)}, {"noise", set(c.data.noise)},
                   {"classes", set(c.data.classes)}, {"spreads", set(c.data.spreads)},
                   {"dim", set(c.data.dim)}, {"path", set(c.data.path)},
                   {"image_side", set(c.data.image_side)},
                   {"labels_per_class", set(c.data.labels_per_class)},
                   {"test_n", set(c.data.test_n)},
                   {"distractor_fraction", set(c.data.distractor_fraction)}});
          }},
         {"augment",
          [&](const json& v) {
            apply(v, "augment",
                  {{"weak_noise", set(c.augment.weak_noise)},
                   {"strong_noise", set(c.augment.strong_noise)},
                   {"strong_dropout", set(c.augment.strong_dropout)},
                   {"flip_prob", set(c.augment.flip_prob)},
                   {"max_shift", set(c.augment.max_shift)},
                   {"image_noise", set(c.augment.image_noise)},
                   {"erase_size", set(c.augment.erase_size)}});
          }},
         {"mode", set(mode)},
         {"threshold_decay", set(c.threshold_decay)},
         {"fixed_threshold", set(c.fixed_threshold)},
         {"status_window", set(c.status_window)},
         {"lambda_u", set(c.lambda_u)},
         {"lambda_c0", set(c.lambda_c0)},
         {"eps1", set(c.eps1)},
         {"eps2", set(c.eps2)},
         {"temperature", set(c.temperature)},
         {"negatives", set(c.negatives)},
         {"lr", set(c.lr)},
         {"momentum", set(c.momentum)},
         {"weight_decay", set(c.weight_decay)},
         {"cosine_lr", set(c.cosine_lr)},
         {"ema_decay", set(c.ema_decay)},
         {"eval_interval", set(c.eval_interval)},
         {"seed", set(c.seed)}});
  c.mode = mode_from_string(mode);
  c.data.kind = data_kind_from_string(kind);
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(cfg);
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace stuc
