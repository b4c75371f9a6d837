#pragma once

#include <cstddef>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdlstm/data.hpp"
#include "tdlstm/errors.hpp"

namespace tdlstm {

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct EvalReport {
  std::size_t count = 0;
  double accuracy = 0;
  std::vector<ClassScores> per_class;
  double macro_f1 = 0;
  /// confusion[gold][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t errors = 0;
  /// Share of misclassified examples whose gold or predicted class is
  /// neutral; 0 when there are no errors.
  double neutral_error_fraction = 0;
};

namespace detail {
inline double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }
}  // namespace detail

/// Macro-F1 is the unweighted mean of per-class F1; zero denominators give 0.
inline EvalReport evaluate(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& golds,
                           std::size_t classes = kNumClasses, std::size_t neutral_class = kNeutralClass) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(golds.size()) + " gold labels");
  }
  if (golds.empty()) throw ValidationError("evaluate: empty input");
  EvalReport r;
  r.count = golds.size();
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t neutral_errors = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const std::size_t g = golds[i];
    const std::size_t p = predictions[i];
    if (g >= classes || p >= classes) {
      throw ValidationError("evaluate: class index out of range at position " + std::to_string(i));
    }
    ++r.confusion[g][p];
    if (g != p) {
      ++r.errors;
      if (g == neutral_class || p == neutral_class) ++neutral_errors;
    }
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < classes; ++c) correct += r.confusion[c][c];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
  r.neutral_error_fraction = detail::safe_ratio(static_cast<double>(neutral_errors), static_cast<double>(r.errors));

  r.per_class.resize(classes);
  double f1_sum = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      predicted += r.confusion[k][c];
      actual += r.confusion[c][k];
    }
    const double tp = static_cast<double>(r.confusion[c][c]);
    auto& s = r.per_class[c];
    s.precision = detail::safe_ratio(tp, static_cast<double>(predicted));
    s.recall = detail::safe_ratio(tp, static_cast<double>(actual));
    s.f1 = detail::safe_ratio(2 * s.precision * s.recall, s.precision + s.recall);
    f1_sum += s.f1;
  }
  r.macro_f1 = f1_sum / static_cast<double>(classes);
  return r;
}

struct ErrorCase {
  std::size_t index = 0;
  const Instance* instance = nullptr;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// Misclassified instances. With `reference`, keeps only those the reference
/// predictions got right (e.g. LSTM errors that TD-LSTM fixes).
inline std::vector<ErrorCase> error_cases(const std::vector<Instance>& instances,
                                          const std::vector<std::size_t>& predictions,
                                          const std::vector<std::size_t>* reference = nullptr) {
  if (instances.size() != predictions.size() || (reference && reference->size() != instances.size())) {
    throw ValidationError("error_cases: instances and predictions are not aligned");
  }
  std::vector<ErrorCase> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::size_t gold = instances[i].gold_class();
    if (predictions[i] == gold) continue;
    if (reference && (*reference)[i] != gold) continue;
    out.push_back({i, &instances[i], predictions[i], gold});
  }
  return out;
}

/// Human-readable report with a row-major confusion matrix (rows = gold).
inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "examples            " << r.count << '\n';
  os << "accuracy            " << r.accuracy << '\n';
  os << "macro_f1            " << r.macro_f1 << '\n';
  os << "neutral_error_frac  " << r.neutral_error_fraction << "  (" << r.errors << " errors)\n\n";
  os << std::left << std::setw(10) << "class" << std::right << std::setw(11) << "precision" << std::setw(9)
     << "recall" << std::setw(9) << "f1" << '\n';
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    os << std::left << std::setw(10) << class_name(c) << std::right << std::setw(11) << r.per_class[c].precision
       << std::setw(9) << r.per_class[c].recall << std::setw(9) << r.per_class[c].f1 << '\n';
  }
  os << "\nconfusion (rows gold, cols predicted)\n" << std::left << std::setw(10) << "";
  for (std::size_t c = 0; c < r.confusion.size(); ++c) os << std::right << std::setw(10) << class_name(c);
  os << '\n';
  for (std::size_t g = 0; g < r.confusion.size(); ++g) {
    os << std::left << std::setw(10) << class_name(g);
    for (std::size_t p = 0; p < r.confusion.size(); ++p) os << std::right << std::setw(10) << r.confusion[g][p];
    os << '\n';
  }
  return os.str();
}

}  // namespace tdlstm
