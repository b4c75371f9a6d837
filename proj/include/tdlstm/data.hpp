#pragma once

#include <array>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tdlstm/errors.hpp"

namespace tdlstm {

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::string_view kTargetPlaceholder = "$T$";

/// Gold polarity as written in the corpus.
enum class Polarity : int { negative = -1, neutral = 0, positive = 1 };

/// Fixed class-index mapping: negative -> 0, neutral -> 1, positive -> 2.
constexpr std::size_t class_index(Polarity p) noexcept { return static_cast<std::size_t>(static_cast<int>(p) + 1); }
constexpr Polarity polarity_of_class(std::size_t c) noexcept { return static_cast<Polarity>(static_cast<int>(c) - 1); }
inline constexpr std::size_t kNeutralClass = class_index(Polarity::neutral);

inline const char* class_name(std::size_t c) {
  static constexpr const char* names[] = {"negative", "neutral", "positive"};
  return c < kNumClasses ? names[c] : "?";
}

/// One labelled example. The target occupies tokens[target_begin, target_end).
struct Instance {
  std::vector<std::string> tokens;
  std::size_t target_begin = 0;
  std::size_t target_end = 0;
  Polarity label = Polarity::neutral;

  std::size_t gold_class() const noexcept { return class_index(label); }
};

struct SplitInstance {
  std::vector<std::string> preceding;
  std::vector<std::string> target;
  std::vector<std::string> following;
  Polarity label = Polarity::neutral;
};

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

inline Polarity parse_polarity(std::string_view s, const std::string& where) {
  if (s == "-1") return Polarity::negative;
  if (s == "0") return Polarity::neutral;
  if (s == "1" || s == "+1") return Polarity::positive;
  throw FormatError(where + ": label '" + std::string(s) + "' is not one of -1, 0, 1");
}

/// Builds an Instance from a sentence containing the $T$ placeholder. Only
/// the first placeholder is the target; text glued to it ("#$T$'s") becomes
/// separate tokens. Later placeholders are replaced by the target words as
/// ordinary context.
inline Instance make_instance(std::string_view sentence, std::string_view target, Polarity label,
                              const std::string& where = "input") {
  const auto target_tokens = tokenize(target);
  if (target_tokens.empty()) throw FormatError(where + ": empty target");
  Instance inst;
  inst.label = label;
  bool placed = false;
  for (auto& tok : tokenize(sentence)) {
    const auto pos = tok.find(kTargetPlaceholder);
    if (pos == std::string::npos) {
      inst.tokens.push_back(std::move(tok));
      continue;
    }
    const std::string prefix = tok.substr(0, pos);
    const std::string suffix = tok.substr(pos + kTargetPlaceholder.size());
    if (!prefix.empty()) inst.tokens.push_back(prefix);
    if (!placed) {
      inst.target_begin = inst.tokens.size();
      inst.tokens.insert(inst.tokens.end(), target_tokens.begin(), target_tokens.end());
      inst.target_end = inst.tokens.size();
      placed = true;
    } else {
      inst.tokens.insert(inst.tokens.end(), target_tokens.begin(), target_tokens.end());
    }
    if (!suffix.empty()) {
      // The suffix may itself contain another placeholder ("$T$/$T$").
      if (suffix.find(kTargetPlaceholder) != std::string::npos) {
        auto rest = make_instance(suffix, target, label, where);
        inst.tokens.insert(inst.tokens.end(), rest.tokens.begin(), rest.tokens.end());
      } else {
        inst.tokens.push_back(suffix);
      }
    }
  }
  if (!placed) throw FormatError(where + ": sentence has no " + std::string(kTargetPlaceholder) + " placeholder");
  return inst;
}

/// Parses 3-line records: sentence with $T$, target string, label.
inline std::vector<Instance> parse_corpus(std::istream& in, const std::string& name = "corpus") {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && tokenize(lines.back()).empty()) lines.pop_back();
  if (lines.size() % 3 != 0) {
    throw FormatError(name + ": " + std::to_string(lines.size()) +
                      " lines is not a whole number of 3-line records (record " +
                      std::to_string(lines.size() / 3) + " is incomplete)");
  }
  std::vector<Instance> out;
  out.reserve(lines.size() / 3);
  for (std::size_t r = 0; r < lines.size() / 3; ++r) {
    const std::string where = name + ": record " + std::to_string(r) + " (line " + std::to_string(3 * r + 1) + ")";
    const auto label_fields = tokenize(lines[3 * r + 2]);
    if (label_fields.size() != 1) throw FormatError(where + ": label line must hold exactly one value");
    out.push_back(make_instance(lines[3 * r], lines[3 * r + 1], parse_polarity(label_fields[0], where), where));
  }
  return out;
}

inline std::vector<Instance> parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus '" + path + "'");
  return parse_corpus(in, path);
}

/// Inverse of parse_corpus for a single instance.
inline void write_record(std::ostream& out, const Instance& inst) {
  std::string sentence, target;
  const auto append = [](std::string& dst, std::string_view tok) {
    if (!dst.empty()) dst += ' ';
    dst += tok;
  };
  for (std::size_t i = 0; i < inst.target_begin; ++i) append(sentence, inst.tokens[i]);
  append(sentence, kTargetPlaceholder);
  for (std::size_t i = inst.target_end; i < inst.tokens.size(); ++i) append(sentence, inst.tokens[i]);
  for (std::size_t i = inst.target_begin; i < inst.target_end; ++i) append(target, inst.tokens[i]);
  out << sentence << '\n' << target << '\n' << static_cast<int>(inst.label) << '\n';
}

inline SplitInstance split(const Instance& inst) {
  using Diff = std::vector<std::string>::difference_type;
  const auto b = inst.tokens.begin();
  return SplitInstance{{b, b + static_cast<Diff>(inst.target_begin)},
                       {b + static_cast<Diff>(inst.target_begin), b + static_cast<Diff>(inst.target_end)},
                       {b + static_cast<Diff>(inst.target_end), inst.tokens.end()},
                       inst.label};
}

/// Fraction of instances per class, indexed by class_index.
inline std::array<double, kNumClasses> class_distribution(const std::vector<Instance>& instances) {
  if (instances.empty()) throw ValidationError("class_distribution: empty instance list");
  std::array<double, kNumClasses> counts{};
  for (const auto& inst : instances) counts[inst.gold_class()] += 1.0;
  for (auto& c : counts) c /= static_cast<double>(instances.size());
  return counts;
}

}  // namespace tdlstm
