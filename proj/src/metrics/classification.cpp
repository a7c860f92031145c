#include "genctx/metrics/classification.h"

#include <fmt/format.h>

#include <map>
#include <stdexcept>

namespace genctx::metrics {

namespace {

std::size_t multiset_overlap(const std::vector<data::EntityPair>& a, const std::vector<data::EntityPair>& b) {
  std::map<data::EntityPair, std::size_t> counts;
  for (const auto& e : a) ++counts[e];
  std::size_t tp = 0;
  for (const auto& e : b) {
    auto it = counts.find(e);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  return tp;
}

PrfScore finish(std::size_t tp, std::size_t pred, std::size_t gold) {
  PrfScore s{tp, pred, gold, 0.0, 0.0, 0.0};
  if (pred == 0 && gold == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred);
  s.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace

PrfScore ner_pair_f1(const std::vector<data::EntityPair>& pred, const std::vector<data::EntityPair>& gold) {
  return finish(multiset_overlap(pred, gold), pred.size(), gold.size());
}

PrfScore ner_pair_f1_corpus(const std::vector<std::vector<data::EntityPair>>& preds,
                            const std::vector<std::vector<data::EntityPair>>& golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument(fmt::format("{} predicted sentences vs {} gold", preds.size(), golds.size()));
  }
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp += multiset_overlap(preds[i], golds[i]);
    np += preds[i].size();
    ng += golds[i].size();
  }
  return finish(tp, np, ng);
}

double macro_f1(std::span<const int> preds, std::span<const int> golds, std::size_t classes) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument(fmt::format("{} predictions vs {} gold labels", preds.size(), golds.size()));
  }
  if (classes == 0) throw std::invalid_argument("macro F1 needs at least one class");
  std::vector<std::size_t> tp(classes), fp(classes), fn(classes);
  auto check = [&](int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::invalid_argument(fmt::format("label {} outside {} classes", label, classes));
    }
    return static_cast<std::size_t>(label);
  };
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const std::size_t p = check(preds[i]), g = check(golds[i]);
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return total / static_cast<double>(classes);
}

}  // namespace genctx::metrics
