#include "stuc/model.hpp"

#include <cmath>

namespace stuc {
namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kElu: return v > 0.0 ? v : std::expm1(v);
    case Activation::kTanh: return std::tanh(v);
  }
  return v;
}

// Derivative expressed through the pre-activation.
double activate_grad(Activation a, double v) {
  switch (a) {
    case Activation::kRelu: return v > 0.0 ? 1.0 : 0.0;
    case Activation::kElu: return v > 0.0 ? 1.0 : std::exp(v);
    case Activation::kTanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Vector dense(const Vector& params, const LayerLayout& l, const Vector& in) {
  Vector out(l.out);
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* w = params.data() + l.weight_offset + o * l.in;
    double s = params[l.bias_offset + o];
    for (std::size_t i = 0; i < l.in; ++i) s += w[i] * in[i];
    out[o] = s;
  }
  return out;
}

// Accumulates weight/bias gradients and returns the gradient at the layer input.
Vector dense_backward(const Vector& params, const LayerLayout& l, const Vector& in,
                      std::span<const double> d_out, Vector& grad) {
  Vector d_in(l.in, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    const double* w = params.data() + l.weight_offset + o * l.in;
    double* gw = grad.data() + l.weight_offset + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) {
      gw[i] += g * in[i];
      d_in[i] += g * w[i];
    }
    grad[l.bias_offset + o] += g;
  }
  return d_in;
}

void require_finite(const Vector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

std::vector<Embedding> weak_embeddings(const std::vector<ForwardCache>& caches) {
  std::vector<Embedding> out;
  out.reserve(caches.size());
  for (const auto& c : caches) out.emplace_back(c.embedding);
  return out;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kElu: return "elu";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "elu") return Activation::kElu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "'");
}

void Architecture::validate() const {
  if (input_dim < 1) throw ConfigError("input dimension must be >= 1");
  if (embed_dim < 2) throw ConfigError("embedding dimension must be >= 2");
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  for (std::size_t h : hidden) {
    if (h < 1) throw ConfigError("hidden layer width must be >= 1");
  }
}

std::vector<LayerLayout> layer_layouts(const Architecture& arch) {
  std::vector<std::size_t> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.embed_dim);
  dims.push_back(arch.num_classes);
  std::vector<LayerLayout> out;
  std::size_t offset = 0;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    LayerLayout l;
    l.in = dims[k];
    l.out = dims[k + 1];
    l.weight_offset = offset;
    l.bias_offset = offset + l.in * l.out;
    offset = l.bias_offset + l.out;
    out.push_back(l);
  }
  return out;
}

std::size_t Architecture::parameter_count() const {
  const auto layers = layer_layouts(*this);
  return layers.back().bias_offset + layers.back().out;
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  arch.validate();
  return ModelParams{arch, Vector(arch.parameter_count(), 0.0)};
}

ModelParams ModelParams::init(const Architecture& arch, Rng& rng) {
  ModelParams p = zeros(arch);
  for (const auto& l : layer_layouts(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t k = 0; k < l.in * l.out; ++k) {
      p.values[l.weight_offset + k] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

bool ModelParams::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ForwardCache forward_cached(const ModelParams& params, const Vector& x) {
  if (x.size() != params.arch.input_dim) {
    throw ContractError("input dimension mismatch");
  }
  const auto layers = layer_layouts(params.arch);
  const std::size_t encoder_layers = layers.size() - 1;
  ForwardCache c;
  Vector h = x;
  for (std::size_t k = 0; k < encoder_layers; ++k) {
    c.inputs.push_back(h);
    Vector pre = dense(params.values, layers[k], h);
    if (k + 1 < encoder_layers) {
      h.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) {
        h[i] = activate(params.arch.activation, pre[i]);
      }
    } else {
      h = pre;
    }
    c.pre.push_back(std::move(pre));
  }
  c.embedding = h;
  c.logits = dense(params.values, layers.back(), c.embedding);
  require_finite(c.logits, "logits in the forward pass");
  const ProbVector p = ProbVector::from_logits(c.logits);
  c.probs.assign(p.values().begin(), p.values().end());
  return c;
}

std::pair<Embedding, ProbVector> forward(const ModelParams& params, const Vector& x) {
  ForwardCache c = forward_cached(params, x);
  return {Embedding(std::move(c.embedding)), ProbVector(std::move(c.probs))};
}

void backward_sample(const ModelParams& params, const ForwardCache& cache,
                     std::span<const double> d_logits,
                     std::span<const double> d_embedding, Vector& grad) {
  const auto layers = layer_layouts(params.arch);
  const std::size_t encoder_layers = layers.size() - 1;
  Vector d = dense_backward(params.values, layers.back(), cache.embedding, d_logits, grad);
  if (!d_embedding.empty()) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += d_embedding[i];
  }
  for (std::size_t k = encoder_layers; k-- > 0;) {
    if (k + 1 < encoder_layers) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] *= activate_grad(params.arch.activation, cache.pre[k][i]);
      }
    }
    d = dense_backward(params.values, layers[k], cache.inputs[k], d, grad);
  }
}

LossTerms evaluate_losses(const ModelParams& params, const CompositeBatch& batch,
                          const LossWeights& weights) {
  LossTerms t;
  if (batch.labeled_x.size() != batch.labels.size() || batch.labeled_x.empty()) {
    throw ContractError("labeled batch is empty or inconsistent");
  }
  for (std::size_t i = 0; i < batch.labeled_x.size(); ++i) {
    t.supervised += cross_entropy(batch.labels[i], forward(params, batch.labeled_x[i]).second);
  }
  t.supervised /= static_cast<double>(batch.labeled_x.size());

  const std::size_t ub = batch.weak_u.size();
  if (weights.lambda_u != 0.0 && ub > 0) {
    for (std::size_t i = 0; i < ub; ++i) {
      if (!batch.decisions[i].accepted) continue;
      t.unsupervised +=
          cross_entropy(batch.decisions[i].label, forward(params, batch.strong_u[i]).second);
    }
    t.unsupervised /= static_cast<double>(ub);
  }
  if (weights.lambda_c != 0.0 && !batch.plan.anchors.empty()) {
    std::vector<Embedding> emb;
    emb.reserve(ub);
    for (const auto& u : batch.weak_u) emb.push_back(forward(params, u).first);
    t.contrastive = unreliable_contrastive_loss(batch.plan, emb);
  }
  t.total = t.supervised + weights.lambda_u * t.unsupervised + weights.lambda_c * t.contrastive;
  return t;
}

namespace {

ForwardCache forward_for(const ModelParams& params, const Vector& x, const char* term) {
  try {
    return forward_cached(params, x);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " while computing the " + term);
  }
}

}  // namespace

GradientResult composite_gradient(const ModelParams& params, const CompositeBatch& batch,
                                  const LossWeights& weights) {
  GradientResult r;
  r.grad.assign(params.values.size(), 0.0);
  const std::size_t C = params.arch.num_classes;
  const std::size_t B = batch.labeled_x.size();
  if (B == 0 || batch.labels.size() != B) {
    throw ContractError("labeled batch is empty or inconsistent");
  }
  Vector d_logits(C);

  // Supervised: d CE / d logits = p - onehot(y).
  for (std::size_t i = 0; i < B; ++i) {
    const ForwardCache c = forward_for(params, batch.labeled_x[i], "supervised loss");
    const std::size_t y = batch.labels[i];
    if (y >= C) throw ContractError("label out of range");
    r.terms.supervised -= std::log(std::max(c.probs[y], kLogClamp));
    for (std::size_t k = 0; k < C; ++k) {
      d_logits[k] = (c.probs[k] - (k == y ? 1.0 : 0.0)) / static_cast<double>(B);
    }
    backward_sample(params, c, d_logits, {}, r.grad);
  }
  r.terms.supervised /= static_cast<double>(B);
  require_finite(r.terms.supervised, "supervised loss");
  require_finite(r.grad, "gradient from the supervised loss");

  const std::size_t ub = batch.weak_u.size();
  const double inv_ub = ub > 0 ? 1.0 / static_cast<double>(ub) : 0.0;
  if (weights.lambda_u != 0.0 && ub > 0) {
    for (std::size_t i = 0; i < ub; ++i) {
      const auto& d = batch.decisions[i];
      if (!d.accepted) continue;
      const ForwardCache c = forward_for(params, batch.strong_u[i], "unsupervised loss");
      r.terms.unsupervised -= std::log(std::max(c.probs[d.label], kLogClamp));
      for (std::size_t k = 0; k < C; ++k) {
        d_logits[k] =
            weights.lambda_u * inv_ub * (c.probs[k] - (k == d.label ? 1.0 : 0.0));
      }
      backward_sample(params, c, d_logits, {}, r.grad);
    }
    r.terms.unsupervised *= inv_ub;
    require_finite(r.terms.unsupervised, "unsupervised loss");
    require_finite(r.grad, "gradient from the unsupervised loss");
  }

  if (weights.lambda_c != 0.0 && !batch.plan.anchors.empty()) {
    std::vector<ForwardCache> caches;
    caches.reserve(ub);
    for (const auto& u : batch.weak_u) caches.push_back(forward_for(params, u, "contrastive loss"));
    const auto emb = weak_embeddings(caches);
    const ContrastiveGradient cg = unreliable_contrastive_gradient(batch.plan, emb);
    r.terms.contrastive = cg.loss;
    require_finite(r.terms.contrastive, "contrastive loss");
    const Vector zero_logits(C, 0.0);
    Vector d_emb;
    for (std::size_t i = 0; i < ub; ++i) {
      bool touched = false;
      d_emb = cg.d_embeddings[i];
      for (double& v : d_emb) {
        v *= weights.lambda_c;
        touched = touched || v != 0.0;
      }
      if (touched) backward_sample(params, caches[i], zero_logits, d_emb, r.grad);
    }
    require_finite(r.grad, "gradient from the contrastive loss");
  }
  r.terms.total = r.terms.supervised + weights.lambda_u * r.terms.unsupervised +
                  weights.lambda_c * r.terms.contrastive;
  return r;
}

SgdMomentum::SgdMomentum(std::size_t size, double momentum, double weight_decay)
    : velocity_(size, 0.0), momentum_(momentum), weight_decay_(weight_decay) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
}

SgdMomentum SgdMomentum::restore(Vector velocity, double momentum, double weight_decay) {
  SgdMomentum s(0, momentum, weight_decay);
  s.velocity_ = std::move(velocity);
  return s;
}

void SgdMomentum::step(ModelParams& params, std::span<const double> grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (grads.size() != params.values.size() || velocity_.size() != grads.size()) {
    throw ContractError("optimizer shape mismatch");
  }
  Vector next = params.values;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double g = grads[i] + weight_decay_ * params.values[i];
    velocity_[i] = momentum_ * velocity_[i] + g;
    next[i] -= lr * velocity_[i];
    if (!std::isfinite(next[i])) throw NumericalError("non-finite parameter update");
  }
  params.values = std::move(next);
}

EmaShadow EmaShadow::of(const ModelParams& params, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw ConfigError("EMA decay must lie in [0, 1]");
  return EmaShadow{params, decay};
}

void EmaShadow::update(const ModelParams& params) {
  if (params.values.size() != shadow.values.size()) {
    throw ContractError("EMA shadow shape mismatch");
  }
  for (std::size_t i = 0; i < shadow.values.size(); ++i) {
    shadow.values[i] = decay * shadow.values[i] + (1.0 - decay) * params.values[i];
  }
}

}  // namespace stuc
