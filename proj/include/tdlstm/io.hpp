#pragma once

// Structured-text serialization (JSON / JSON Lines) for logs, reports and
// configuration files.

#include <fstream>
#include <string>

#include <json.hpp>

#include "tdlstm/data.hpp"
#include "tdlstm/evaluation.hpp"
#include "tdlstm/training.hpp"

namespace tdlstm {

using json = nlohmann::json;

namespace detail {
inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
}  // namespace detail

/// One training-log line. Wall-clock time is left out so that logs of
/// identical runs are byte-identical; see timing_json.
inline json to_json(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"mean_loss", r.mean_loss},
              {"train_accuracy", detail::optional_number(r.train_accuracy)},
              {"test_accuracy", detail::optional_number(r.test_accuracy)},
              {"test_macro_f1", detail::optional_number(r.test_macro_f1)}};
}

inline json timing_json(const EpochRecord& r) { return json{{"epoch", r.epoch}, {"seconds", r.seconds}}; }

inline void write_train_log(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log '" + path + "'");
  for (const auto& r : log.epochs) out << to_json(r).dump() << '\n';
}

inline void write_timing_log(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write timing log '" + path + "'");
  for (const auto& r : log.epochs) out << timing_json(r).dump() << '\n';
}

inline json to_json(const EvalReport& r) {
  json per_class = json::object();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    per_class[class_name(c)] = {
        {"precision", r.per_class[c].precision}, {"recall", r.per_class[c].recall}, {"f1", r.per_class[c].f1}};
  }
  json labels = json::array();
  for (std::size_t c = 0; c < r.confusion.size(); ++c) labels.push_back(class_name(c));
  return json{{"examples", r.count},
              {"accuracy", r.accuracy},
              {"macro_f1", r.macro_f1},
              {"per_class", per_class},
              {"confusion_labels", labels},
              {"confusion", r.confusion},
              {"errors", r.errors},
              {"neutral_error_fraction", r.neutral_error_fraction}};
}

/// Overlays keys present in `j` onto `cfg`. Unknown keys are rejected.
inline void apply_config(TrainConfig& cfg, const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "variant") cfg.variant = parse_variant(value.get<std::string>());
      else if (key == "combine") cfg.combine = parse_combine(value.get<std::string>());
      else if (key == "hidden") cfg.hidden = value.get<std::size_t>();
      else if (key == "lr" || key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "clip") cfg.clip_threshold = value.get<double>();
      else if (key == "clip_mode") cfg.clip_mode = parse_clip_mode(value.get<std::string>());
      else if (key == "trainable_embeddings") cfg.embeddings_trainable = value.get<bool>();
      else if (key == "eval_train") cfg.eval_train = value.get<bool>();
      else throw ValidationError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace tdlstm
