#include "genctx/harness/grad_suite.h"

#include <functional>
#include <utility>

#include "genctx/autodiff/nn.h"
#include "genctx/autodiff/rng.h"
#include "genctx/losses/ctc.h"
#include "genctx/losses/losses.h"
#include "genctx/models/system.h"

namespace genctx::harness {

namespace {

using ad::Tensor;

struct Case {
  std::string name;
  std::function<GradCase(Rng&)> run;
};

Tensor random_leaf(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), true);
}

Tensor constant_like(Rng& rng, const Tensor& t) {
  std::vector<double> v(t.numel());
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(t.shape(), std::move(v));
}

// Reduces an arbitrary output to a scalar with fixed random weights, so every
// output coordinate gets a distinct upstream gradient.
Tensor project(const Tensor& y, const Tensor& w) { return ad::sum(ad::mul(y, w)); }

GradCase unary_case(std::string name, Rng& rng, Tensor (*op)(const Tensor&), double lo, double hi) {
  Tensor x = random_leaf(rng, {3, 4}, lo, hi);
  const Tensor w = constant_like(rng, x);
  return {std::move(name), ad::check_gradients([&] { return project(op(x), w); }, {x})};
}

GradCase weighted(std::string name, Rng& rng, std::vector<Tensor> inputs,
                  const std::function<Tensor()>& f) {
  const Tensor probe = f();
  const Tensor w = constant_like(rng, probe);
  return {std::move(name), ad::check_gradients([&] { return project(f(), w); }, std::move(inputs))};
}

void randomize(ad::ParameterStore& store, Rng& rng) {
  for (const auto& p : store.parameters()) {
    Tensor t = p.tensor;
    for (double& v : t.mutable_values()) v = rng.uniform(-1.0, 1.0);
  }
}

models::ModelConfig small_config(models::TaskKind task) {
  models::ModelConfig c;
  c.d_feat = 4;
  c.d_model = 8;
  c.d_text = 6;
  c.encoder_layers = 1;
  c.encoder_heads = 2;
  c.encoder_head_dim = 4;
  c.text_layers = 1;
  c.text_heads = 1;
  c.text_head_dim = 4;
  c.ffn_mult = 2;
  c.fusion_heads = 1;
  c.fusion_head_dim = 4;
  c.text_vocab = 7;
  c.output_size = task == models::TaskKind::Sentiment ? 3 : 5;
  c.task = task;
  return c;
}

GradCase system_case(std::string name, Rng& rng, models::Variant variant, models::TaskKind task,
                     models::EmbeddingMode mode = models::EmbeddingMode::Fixed) {
  models::ModelConfig cfg = small_config(task);
  cfg.mode = mode;
  models::ContextSystem system(variant, cfg, rng.below(1u << 30));
  randomize(system.store(), rng);
  const Tensor features = constant_like(rng, Tensor::zeros({7, cfg.d_feat}));
  const std::vector<int> target{1, 3, 3, 2};
  const models::ContextInput context = models::ContextInput::text({2, 5, 1, 6});

  models::TeacherEncoder teacher(cfg, rng.below(1u << 30));
  const Tensor e = teacher.embed(models::ContextInput::text({3, 4, 2}));
  // Fresh encoders are the identity plus the token table; push the teacher
  // away from the student's scale so the distance stays well above zero.
  const Tensor e_far = ad::scale(e, 3.0);

  losses::LossConfig loss;
  loss.alpha = 0.7;
  auto f = [&] {
    const models::ForwardResult r = system.forward(features, context);
    const Tensor task_loss = task == models::TaskKind::Sentiment ? losses::cross_entropy(r.output, 2)
                                                                : losses::ctc_loss(r.output, target);
    if (!r.student.defined()) return task_loss;
    return losses::combined_loss(task_loss, losses::context_l2(e_far, r.student), loss);
  };
  GradCase out{std::move(name), ad::check_gradients(f, system.store().tensors(), 1e-5, 1e-4,
                                                     ad::GradErrorNorm::PerTensor)};
  out.parameters = system.store().count();
  return out;
}

std::vector<Case> all_cases() {
  using ad::Shape;
  std::vector<Case> cases;
  auto add = [&](std::string name, std::function<GradCase(Rng&)> run) {
    cases.push_back({std::move(name), std::move(run)});
  };

  add("exp", [](Rng& r) { return unary_case("exp", r, &ad::exp, -1.0, 1.0); });
  add("log", [](Rng& r) { return unary_case("log", r, &ad::log, 0.5, 2.0); });
  add("sqrt", [](Rng& r) { return unary_case("sqrt", r, &ad::sqrt, 0.5, 2.0); });
  add("tanh", [](Rng& r) { return unary_case("tanh", r, &ad::tanh, -2.0, 2.0); });
  add("gelu", [](Rng& r) { return unary_case("gelu", r, &ad::gelu, -3.0, 3.0); });
  add("neg", [](Rng& r) { return unary_case("neg", r, &ad::neg, -1.0, 1.0); });
  add("add", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}), b = random_leaf(r, {3, 4});
    return weighted("add", r, {a, b}, [&] { return ad::add(a, b); });
  });
  add("sub", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}), b = random_leaf(r, {3, 4});
    return weighted("sub", r, {a, b}, [&] { return ad::sub(a, b); });
  });
  add("mul", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}), b = random_leaf(r, {3, 4});
    return weighted("mul", r, {a, b}, [&] { return ad::mul(a, b); });
  });
  add("mul_shared_input", [](Rng& r) {
    Tensor a = random_leaf(r, {5});
    return weighted("mul_shared_input", r, {a}, [&] { return ad::mul(a, a); });
  });
  add("add_scalar", [](Rng& r) {
    Tensor a = random_leaf(r, {4});
    return weighted("add_scalar", r, {a}, [&] { return ad::add(a, 2.5); });
  });
  add("scale", [](Rng& r) {
    Tensor a = random_leaf(r, {4});
    return weighted("scale", r, {a}, [&] { return ad::scale(a, -1.7); });
  });
  add("sum", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 2});
    return GradCase{"sum", ad::check_gradients([&] { return ad::scale(ad::sum(a), 1.3); }, {a})};
  });
  add("mean", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 2});
    return GradCase{"mean", ad::check_gradients([&] { return ad::mean(a); }, {a})};
  });
  add("sum_squares", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 2});
    return GradCase{"sum_squares", ad::check_gradients([&] { return ad::sum_squares(a); }, {a})};
  });
  add("matmul", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}), b = random_leaf(r, {4, 2});
    return weighted("matmul", r, {a, b}, [&] { return ad::matmul(a, b); });
  });
  add("transpose", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4});
    return weighted("transpose", r, {a}, [&] { return ad::transpose(a); });
  });
  add("reshape", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4});
    return weighted("reshape", r, {a}, [&] { return ad::reshape(a, Shape{2, 6}); });
  });
  add("slice_rows", [](Rng& r) {
    Tensor a = random_leaf(r, {5, 3});
    return weighted("slice_rows", r, {a}, [&] { return ad::slice_rows(a, 1, 4); });
  });
  add("slice_cols", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 5});
    return weighted("slice_cols", r, {a}, [&] { return ad::slice_cols(a, 2, 5); });
  });
  add("concat_cols", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 2}), b = random_leaf(r, {3, 4});
    return weighted("concat_cols", r, {a, b}, [&] { return ad::concat_cols({a, b, a}); });
  });
  add("concat_rows", [](Rng& r) {
    Tensor a = random_leaf(r, {2, 3}), b = random_leaf(r, {1, 3});
    return weighted("concat_rows", r, {a, b}, [&] { return ad::concat_rows({a, b}); });
  });
  add("row", [](Rng& r) {
    Tensor a = random_leaf(r, {4, 3});
    return weighted("row", r, {a}, [&] { return ad::row(a, 2); });
  });
  add("repeat_rows", [](Rng& r) {
    Tensor v = random_leaf(r, {3});
    return weighted("repeat_rows", r, {v}, [&] { return ad::repeat_rows(v, 4); });
  });
  add("softmax_rows", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}, -2.0, 2.0);
    return weighted("softmax_rows", r, {a}, [&] { return ad::softmax(a, 1); });
  });
  add("softmax_cols", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}, -2.0, 2.0);
    return weighted("softmax_cols", r, {a}, [&] { return ad::softmax(a, 0); });
  });
  add("log_softmax_rows", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}, -2.0, 2.0);
    return weighted("log_softmax_rows", r, {a}, [&] { return ad::log_softmax(a, 1); });
  });
  add("log_softmax_cols", [](Rng& r) {
    Tensor a = random_leaf(r, {3, 4}, -2.0, 2.0);
    return weighted("log_softmax_cols", r, {a}, [&] { return ad::log_softmax(a, 0); });
  });
  add("layer_norm", [](Rng& r) {
    Tensor x = random_leaf(r, {3, 5}, -2.0, 2.0), g = random_leaf(r, {5}, 0.5, 1.5), b = random_leaf(r, {5});
    return weighted("layer_norm", r, {x, g, b}, [&] { return ad::layer_norm(x, g, b); });
  });
  add("linear", [](Rng& r) {
    Tensor x = random_leaf(r, {3, 4}), w = random_leaf(r, {2, 4}), b = random_leaf(r, {2});
    return weighted("linear", r, {x, w, b}, [&] { return ad::linear(x, w, b); });
  });
  add("linear_vector", [](Rng& r) {
    Tensor x = random_leaf(r, {4}), w = random_leaf(r, {3, 4}), b = random_leaf(r, {3});
    return weighted("linear_vector", r, {x, w, b}, [&] { return ad::linear(x, w, b); });
  });
  add("linear_no_bias", [](Rng& r) {
    Tensor x = random_leaf(r, {3, 4});
    ad::LinearParams p{random_leaf(r, {2, 4}), Tensor()};
    return weighted("linear_no_bias", r, {x, p.weight}, [&] { return ad::linear(x, p); });
  });
  add("mean_pool", [](Rng& r) {
    Tensor x = random_leaf(r, {5, 3});
    return weighted("mean_pool", r, {x}, [&] { return ad::mean_pool(x); });
  });
  add("embed_tokens", [](Rng& r) {
    Tensor table = random_leaf(r, {6, 3});
    const std::vector<int> ids{4, 0, 4, 2};
    return weighted("embed_tokens", r, {table}, [&] { return ad::embed_tokens(ids, table); });
  });
  add("attention", [](Rng& r) {
    ad::ParameterStore store(r.below(1u << 30));
    const auto p = ad::AttentionParams::create(store, "attn", {2, 3, 5, 4, 5});
    randomize(store, r);
    Tensor q = random_leaf(r, {3, 5}), kv = random_leaf(r, {4, 4});
    std::vector<Tensor> inputs = store.tensors();
    inputs.push_back(q);
    inputs.push_back(kv);
    return weighted("attention", r, inputs, [&] { return ad::multi_head_attention(q, kv, p); });
  });
  add("cross_attention_single_key", [](Rng& r) {
    ad::ParameterStore store(r.below(1u << 30));
    const auto p = ad::AttentionParams::create(store, "attn", {1, 4, 5, 3, 5});
    randomize(store, r);
    Tensor q = random_leaf(r, {4, 5}), kv = random_leaf(r, {1, 3});
    std::vector<Tensor> inputs = store.tensors();
    inputs.push_back(q);
    inputs.push_back(kv);
    return weighted("cross_attention_single_key", r, inputs,
                    [&] { return ad::multi_head_attention(q, kv, p); });
  });
  add("transformer_layer", [](Rng& r) {
    ad::ParameterStore store(r.below(1u << 30));
    const auto p = ad::TransformerLayerParams::create(store, "layer", 6, 2, 3, 12);
    randomize(store, r);
    Tensor x = random_leaf(r, {4, 6});
    std::vector<Tensor> inputs = store.tensors();
    inputs.push_back(x);
    return weighted("transformer_layer", r, inputs, [&] { return ad::transformer_layer(x, p); });
  });
  add("cross_entropy", [](Rng& r) {
    Tensor logits = random_leaf(r, {5}, -2.0, 2.0);
    return GradCase{"cross_entropy", ad::check_gradients([&] { return losses::cross_entropy(logits, 3); }, {logits})};
  });
  add("ctc_loss", [](Rng& r) {
    Tensor logits = random_leaf(r, {7, 4}, -2.0, 2.0);
    const std::vector<int> target{1, 2, 2, 3};
    return GradCase{"ctc_loss", ad::check_gradients(
                                    [&] { return losses::ctc_loss(ad::log_softmax(logits, 1), target); },
                                    {logits})};
  });
  add("ctc_loss_tight", [](Rng& r) {
    // T equals the minimum frame count: a single alignment survives.
    Tensor logits = random_leaf(r, {4, 3}, -2.0, 2.0);
    const std::vector<int> target{1, 1, 2};
    return GradCase{"ctc_loss_tight", ad::check_gradients(
                                          [&] { return losses::ctc_loss(ad::log_softmax(logits, 1), target); },
                                          {logits})};
  });
  add("context_l2_norm", [](Rng& r) {
    const Tensor teacher = constant_like(r, Tensor::zeros({6}));
    Tensor student = random_leaf(r, {6});
    return GradCase{"context_l2_norm", ad::check_gradients(
                                           [&] { return losses::context_l2(teacher, student); }, {student})};
  });
  add("context_l2_squared", [](Rng& r) {
    const Tensor teacher = constant_like(r, Tensor::zeros({6}));
    Tensor student = random_leaf(r, {6});
    return GradCase{"context_l2_squared",
                    ad::check_gradients(
                        [&] {
                          return losses::context_l2(teacher, student, losses::ContextLossKind::SquaredNorm);
                        },
                        {student})};
  });
  add("combined_loss", [](Rng& r) {
    Tensor a = random_leaf(r, {1}), b = random_leaf(r, {1});
    losses::LossConfig cfg;
    cfg.alpha = 0.3;
    return GradCase{"combined_loss", ad::check_gradients(
                                         [&] {
                                           return losses::combined_loss(ad::sum(ad::mul(a, a)),
                                                                        ad::sum(ad::exp(b)), cfg);
                                         },
                                         {a, b})};
  });
  add("graph_baseline_asr", [](Rng& r) {
    return system_case("graph_baseline_asr", r, models::Variant::Baseline, models::TaskKind::Asr);
  });
  add("graph_generative_injection_asr", [](Rng& r) {
    return system_case("graph_generative_injection_asr", r, models::Variant::GenerativeInjection,
                       models::TaskKind::Asr);
  });
  add("graph_generative_injection_sequence", [](Rng& r) {
    return system_case("graph_generative_injection_sequence", r, models::Variant::GenerativeInjection,
                       models::TaskKind::Asr, models::EmbeddingMode::Sequence);
  });
  add("graph_generative_aware_asr", [](Rng& r) {
    return system_case("graph_generative_aware_asr", r, models::Variant::GenerativeAware, models::TaskKind::Asr);
  });
  add("graph_generative_aware_ner", [](Rng& r) {
    return system_case("graph_generative_aware_ner", r, models::Variant::GenerativeAware, models::TaskKind::Ner);
  });
  add("graph_generative_aware_sentiment", [](Rng& r) {
    return system_case("graph_generative_aware_sentiment", r, models::Variant::GenerativeAware,
                       models::TaskKind::Sentiment);
  });
  return cases;
}

}  // namespace

std::vector<std::string> grad_case_names() {
  std::vector<std::string> names;
  for (const Case& c : all_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradCase> run_grad_suite(std::uint64_t seed, const std::string& filter) {
  std::vector<GradCase> out;
  std::size_t index = 0;
  for (const Case& c : all_cases()) {
    // Each case gets its own stream so filtering does not shift the others.
    Rng rng(mix_seed(seed, index++));
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    out.push_back(c.run(rng));
  }
  return out;
}

}  // namespace genctx::harness
