#include "hiergeo/model.hpp"

#include "hiergeo/error.hpp"
#include "hiergeo/random.hpp"
#include "hiergeo/softmax.hpp"

#include <cmath>

namespace hiergeo {

Index ModelConfig::joint_dim() const {
  Index d = 0;
  for (Index n : hierarchy_sizes) d += n;
  return d;
}

void ModelConfig::validate() const {
  const auto check = [](bool ok, const std::string& what) { require(ok, Errc::config, "model config: " + what); };
  check(feature_dim > 0, "feature_dim must be positive");
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    check(hierarchy_sizes[h] > 0, std::string(hierarchy_name(h)) + " class count must be positive");
  }
  check(scene_dim > 0 && text_dim > 0, "scene_dim and text_dim must be positive");
  check(num_heads > 0 && token_embed_dim > 0, "attention heads and embedding size must be positive");
  check(token_embed_dim % num_heads == 0, "token_embed_dim " + std::to_string(token_embed_dim) +
                                              " is not divisible by " + std::to_string(num_heads) + " heads");
  check(scene_depth > 0 && text_depth > 0, "feed-forward depths must be positive");
  check(std::isfinite(loss_weights.geo) && std::isfinite(loss_weights.scene) && std::isfinite(loss_weights.tla),
        "loss weights must be finite");
  if (!classes.empty()) {
    const Taxonomy tax = Taxonomy::build(classes);
    for (std::size_t h = 0; h < kNumHierarchies; ++h) {
      check(static_cast<Index>(tax.size(h)) == hierarchy_sizes[h],
            "recorded classes disagree with " + std::string(hierarchy_name(h)) + " size");
    }
  }
}

ModelConfig ModelConfig::for_taxonomy(const Taxonomy& taxonomy) {
  ModelConfig config;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) config.hierarchy_sizes[h] = static_cast<Index>(taxonomy.size(h));
  config.classes = taxonomy.records();
  return config;
}

nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["feature_dim"] = c.feature_dim;
  j["hierarchy_sizes"] = c.hierarchy_sizes;
  j["scene_dim"] = c.scene_dim;
  j["text_dim"] = c.text_dim;
  j["num_heads"] = c.num_heads;
  j["token_embed_dim"] = c.token_embed_dim;
  j["scene_depth"] = c.scene_depth;
  j["text_depth"] = c.text_depth;
  j["seed"] = c.seed;
  j["loss_weights"] = {{"geo", c.loss_weights.geo}, {"scene", c.loss_weights.scene}, {"tla", c.loss_weights.tla}};
  if (!c.classes.empty()) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& r : c.classes) classes.push_back({r.city, r.state, r.country, r.continent});
    j["classes"] = std::move(classes);
  }
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    if (j.contains("hierarchy_sizes")) c.hierarchy_sizes = j.at("hierarchy_sizes").get<std::array<Index, 4>>();
    c.scene_dim = j.value("scene_dim", c.scene_dim);
    c.text_dim = j.value("text_dim", c.text_dim);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.token_embed_dim = j.value("token_embed_dim", c.token_embed_dim);
    c.scene_depth = j.value("scene_depth", c.scene_depth);
    c.text_depth = j.value("text_depth", c.text_depth);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss_weights")) {
      const auto& w = j.at("loss_weights");
      c.loss_weights.geo = w.value("geo", 1.0);
      c.loss_weights.scene = w.value("scene", 1.0);
      c.loss_weights.tla = w.value("tla", 1.0);
    }
    if (j.contains("classes")) {
      for (const auto& r : j.at("classes")) {
        c.classes.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>(), r.at(2).get<std::string>(),
                             r.at(3).get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("model config: ") + e.what());
  }
  return c;
}

namespace {

template <typename Self, typename Visitor>
void visit_params(Self& p, Visitor&& fn) {
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    const std::string prefix = "head." + std::to_string(h) + ".";
    fn(prefix + "weight", p.heads[h].weight);
    fn(prefix + "bias", p.heads[h].bias);
  }
  p.attention.visit("attention.", fn);
  for (std::size_t i = 0; i < p.scene_ffn.size(); ++i) {
    fn("scene_ffn." + std::to_string(i) + ".weight", p.scene_ffn[i].weight);
    fn("scene_ffn." + std::to_string(i) + ".bias", p.scene_ffn[i].bias);
  }
  for (std::size_t i = 0; i < p.text_ffn.size(); ++i) {
    fn("text_ffn." + std::to_string(i) + ".weight", p.text_ffn[i].weight);
    fn("text_ffn." + std::to_string(i) + ".bias", p.text_ffn[i].bias);
  }
}

std::vector<Index> ffn_widths(Index from, Index to, Index depth) { return geometric_widths(from, to, depth); }

Ffn<double> zero_ffn(const std::vector<Index>& widths) {
  Ffn<double> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto act = i + 2 == widths.size() ? Activation::identity : Activation::relu;
    layers.push_back(DenseLayer<double>::zeros(widths[i], widths[i + 1], act));
  }
  return layers;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    p.heads[h] = DenseLayer<double>::zeros(config.feature_dim, config.hierarchy_sizes[h], Activation::identity);
  }
  p.attention = AttentionParams<double>::zeros(config.num_heads, config.token_embed_dim);
  const Index d = config.joint_dim();
  p.scene_ffn = zero_ffn(ffn_widths(d, config.scene_dim, config.scene_depth));
  p.text_ffn = zero_ffn(ffn_widths(d, config.text_dim, config.text_depth));
  return p;
}

ParamSlots<double> ModelParams::slots() {
  ParamSlots<double> out;
  visit_params(*this, [&](const std::string& name, auto& tensor) { out.push_back({name, as_span(tensor)}); });
  return out;
}

ParamSlots<const double> ModelParams::slots() const {
  ParamSlots<const double> out;
  visit_params(*this, [&](const std::string& name, const auto& tensor) { out.push_back({name, as_span(tensor)}); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : slots()) n += s.values.size();
  return n;
}

void ModelParams::set_zero() {
  for (auto& s : slots()) std::fill(s.values.begin(), s.values.end(), 0.0);
}

ModelParams init_model(const ModelConfig& config) {
  ModelParams p = ModelParams::zeros(config);
  Rng head_rng(derive_seed(config.seed, seed_ordinal::heads));
  for (auto& head : p.heads) glorot_fill(as_span(head.weight), head.in_dim(), head.out_dim(), head_rng);
  Rng attention_rng(derive_seed(config.seed, seed_ordinal::attention));
  p.attention = AttentionParams<double>::random(config.num_heads, config.token_embed_dim, attention_rng);
  const Index d = config.joint_dim();
  Rng scene_rng(derive_seed(config.seed, seed_ordinal::scene_ffn));
  p.scene_ffn = make_ffn<double>(ffn_widths(d, config.scene_dim, config.scene_depth), scene_rng);
  Rng text_rng(derive_seed(config.seed, seed_ordinal::text_ffn));
  p.text_ffn = make_ffn<double>(ffn_widths(d, config.text_dim, config.text_depth), text_rng);
  return p;
}

ForwardOutput forward(const VectorXd& features, const ModelParams& params, ForwardTrace* trace) {
  const Index feature_dim = params.heads[0].in_dim();
  require(features.size() == feature_dim, Errc::dimension,
          "forward: feature vector has dimension " + std::to_string(features.size()) + ", model expects " +
              std::to_string(feature_dim));
  ForwardOutput out;
  Index d = 0;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    const auto& head = params.heads[h];
    require(head.in_dim() == feature_dim, Errc::dimension, "forward: classifier heads disagree on input size");
    out.logits[h] = head.weight * features + head.bias;
    d += out.logits[h].size();
  }
  out.joint.resize(d);
  Index offset = 0;
  for (const auto& l : out.logits) {
    out.joint.segment(offset, l.size()) = l;
    offset += l.size();
  }
  out.attended = multihead_attention(out.joint, params.attention, trace ? &trace->attention : nullptr);
  out.scene_logits = ffn_forward(out.attended, params.scene_ffn, trace ? &trace->scene : nullptr);
  out.text_vector = ffn_forward(out.attended, params.text_ffn, trace ? &trace->text : nullptr);
  if (trace) trace->features = features;
  return out;
}

double loss_geo(const ForwardOutput& output, const LabelPath& labels) {
  double loss = 0.0;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    const auto& logits = output.logits[h];
    require(labels.ids[h] >= 0 && labels.ids[h] < logits.size(), Errc::index,
            "loss_geo: " + std::string(hierarchy_name(h)) + " label " + std::to_string(labels.ids[h]) +
                " out of range");
    loss -= log_softmax(logits)(labels.ids[h]);
  }
  return loss;
}

double loss_scene(const VectorXd& scene_logits, const VectorXd& soft_label) {
  require(scene_logits.size() == soft_label.size(), Errc::dimension,
          "loss_scene: " + std::to_string(scene_logits.size()) + " scene logits vs " +
              std::to_string(soft_label.size()) + "-class label");
  return -soft_label.dot(log_softmax(scene_logits));
}

double loss_tla(const VectorXd& text_vector, const VectorXd& text_target) {
  require(text_vector.size() == text_target.size(), Errc::dimension, "loss_tla: dimension mismatch");
  const double nx = text_vector.norm();
  const double nt = text_target.norm();
  require(nx != 0.0 && nt != 0.0, Errc::degenerate_input, "loss_tla: zero-norm vector");
  return -text_vector.dot(text_target) / (nx * nt);
}

LossBreakdown total_loss(const ForwardOutput& output, const LabelPath& labels, const VectorXd& soft_label,
                         const VectorXd& text_target, const LossWeights& weights) {
  LossBreakdown b;
  b.geo = loss_geo(output, labels);
  b.scene = loss_scene(output.scene_logits, soft_label);
  b.tla = loss_tla(output.text_vector, text_target);
  b.total = weights.geo * b.geo + weights.scene * b.scene + weights.tla * b.tla;
  return b;
}

LossBreakdown accumulate_gradients(const TrainingSample& sample, const ModelParams& params, const LossWeights& weights,
                                   double scale, ModelParams& grads) {
  ForwardTrace trace;
  const ForwardOutput out = forward(*sample.features, params, &trace);
  const LossBreakdown loss = total_loss(out, sample.labels, *sample.soft_label, *sample.text_target, weights);

  // Scene branch: d/dz of -s.log softmax(z) is softmax(z) * sum(s) - s.
  const VectorXd& s = *sample.soft_label;
  VectorXd d_scene = (scale * weights.scene) * (softmax(out.scene_logits) * s.sum() - s);

  // Alignment branch: gradient of -cos(x, t) with respect to x.
  const VectorXd& x = out.text_vector;
  const VectorXd& t = *sample.text_target;
  const double nx = x.norm();
  const double nt = t.norm();
  const double cos = x.dot(t) / (nx * nt);
  VectorXd d_text = (-scale * weights.tla) * (t / (nx * nt) - cos * x / (nx * nx));

  VectorXd d_attended = ffn_backward(d_scene, params.scene_ffn, trace.scene, grads.scene_ffn);
  d_attended += ffn_backward(d_text, params.text_ffn, trace.text, grads.text_ffn);
  const VectorXd d_joint = multihead_attention_backward(d_attended, params.attention, trace.attention, grads.attention);

  Index offset = 0;
  for (std::size_t h = 0; h < kNumHierarchies; ++h) {
    const auto& logits = out.logits[h];
    VectorXd d_logits = d_joint.segment(offset, logits.size());
    VectorXd p = softmax(logits);
    p(sample.labels.ids[h]) -= 1.0;
    d_logits += (scale * weights.geo) * p;
    grads.heads[h].weight.noalias() += d_logits * trace.features.transpose();
    grads.heads[h].bias += d_logits;
    offset += logits.size();
  }
  return loss;
}

LossBreakdown batch_gradients(std::span<const TrainingSample> batch, const ModelParams& params,
                              const LossWeights& weights, ModelParams& grads) {
  require(!batch.empty(), Errc::empty_input, "batch_gradients: empty batch");
  grads.set_zero();
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossBreakdown sum;
  for (const auto& sample : batch) sum += accumulate_gradients(sample, params, weights, scale, grads);
  return sum.scaled(scale);
}

}  // namespace hiergeo
