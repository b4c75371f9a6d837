#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tdlstm/data.hpp"
#include "tdlstm/embeddings.hpp"
#include "tdlstm/random.hpp"

namespace tdlstm {

/// Controlled target-dependent corpus. Every base sentence mentions two
/// entities, each directly preceded by a sentiment cue of opposite polarity:
///
///   w3 pos_1 ent_4 w7 w0 neg_2 ent_9 ent_12 w5
///
/// and yields two instances, one per entity, labelled by the cue adjacent to
/// that entity. The two instances share their token sequence, so a
/// target-blind classifier cannot beat 50% on them.
struct SyntheticOptions {
  std::size_t base_sentences = 1000;
  std::size_t entities = 20;
  std::size_t cues_per_polarity = 5;
  std::size_t fillers = 30;
  std::size_t max_gap = 3;  // filler run lengths are drawn from [0, max_gap]
  double two_word_entity_rate = 0.25;
};

inline std::vector<Instance> generate_target_pairs(const SyntheticOptions& opt, Rng& rng) {
  const auto pick = [&](const char* prefix, std::size_t n) {
    return std::string(prefix) + std::to_string(rng.below(n));
  };
  const auto fill = [&](std::vector<std::string>& out, std::size_t min_len) {
    const std::size_t n = min_len + static_cast<std::size_t>(rng.below(opt.max_gap + 1));
    for (std::size_t i = 0; i < n; ++i) out.push_back(pick("w", opt.fillers));
  };
  std::vector<Instance> out;
  out.reserve(2 * opt.base_sentences);
  for (std::size_t s = 0; s < opt.base_sentences; ++s) {
    const bool first_positive = rng.below(2) == 1;
    const std::size_t ent_a = static_cast<std::size_t>(rng.below(opt.entities));
    std::size_t ent_b = static_cast<std::size_t>(rng.below(opt.entities - 1));
    if (ent_b >= ent_a) ++ent_b;
    const auto entity = [&](std::size_t head) {
      std::vector<std::string> e{"ent" + std::to_string(head)};
      if (rng.next_double() < opt.two_word_entity_rate) e.push_back(pick("ent", opt.entities));
      return e;
    };

    std::vector<std::string> tokens;
    fill(tokens, 0);
    tokens.push_back(pick(first_positive ? "pos" : "neg", opt.cues_per_polarity));
    const std::size_t a_begin = tokens.size();
    for (auto& t : entity(ent_a)) tokens.push_back(std::move(t));
    const std::size_t a_end = tokens.size();
    fill(tokens, 1);
    tokens.push_back(pick(first_positive ? "neg" : "pos", opt.cues_per_polarity));
    const std::size_t b_begin = tokens.size();
    for (auto& t : entity(ent_b)) tokens.push_back(std::move(t));
    const std::size_t b_end = tokens.size();
    fill(tokens, 0);

    const Polarity pa = first_positive ? Polarity::positive : Polarity::negative;
    const Polarity pb = first_positive ? Polarity::negative : Polarity::positive;
    out.push_back(Instance{tokens, a_begin, a_end, pa});
    out.push_back(Instance{tokens, b_begin, b_end, pb});
  }
  return out;
}

}  // namespace tdlstm
