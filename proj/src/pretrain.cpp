#include "otf/pretrain.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "otf/error.hpp"
#include "otf/rng.hpp"

namespace otf {

namespace {

struct ForwardPass {
  Vector pre;  // W x + b
  double norm = 0.0;
  Vector out;  // normalized
  bool degenerate = false;
};

ForwardPass forward(const LinearHead& head, std::span<const double> x) {
  ForwardPass pass;
  pass.pre = affine(head, x);
  pass.norm = l2_norm(pass.pre);
  auto normalized = l2_normalize(pass.pre);
  pass.out = std::move(normalized.values);
  pass.degenerate = normalized.degenerate;
  return pass;
}

// Accumulates d(loss)/d(W, b) given d(loss)/d(embedding) for input `x`.
void backward(const ForwardPass& pass, std::span<const double> x,
              std::span<const double> grad_out, HeadGradient& grad) {
  // The zero-norm fallback is constant in the parameters.
  if (pass.degenerate) return;
  double dot = 0.0;
  for (std::size_t i = 0; i < grad_out.size(); ++i) dot += pass.out[i] * grad_out[i];
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    const double g = (grad_out[i] - pass.out[i] * dot) / pass.norm;
    grad.d_bias[i] += g;
    auto row = grad.d_weight.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) row[j] += g * x[j];
  }
}

void require_triplet_dims(const LinearHead& head, const Triplet& t) {
  if (t.anchor.size() != head.in_dim() || t.positive.size() != head.in_dim() ||
      t.negative.size() != head.in_dim()) {
    throw InvalidInput("triplet dimension does not match head in_dim");
  }
}

}  // namespace

void PretrainConfig::validate() const {
  if (!(margin > 0.0)) throw InvalidInput("pretrain.margin must be > 0");
  if (batch_size < 1) throw InvalidInput("pretrain.batch_size must be >= 1");
  if (!(lr >= 0.0)) throw InvalidInput("pretrain.lr must be >= 0");
  if (embed_dim < 1) throw InvalidInput("pretrain.embed_dim must be >= 1");
  if (!(init_scale > 0.0)) throw InvalidInput("pretrain.init_scale must be > 0");
  adam.validate();
}

HeadGradient HeadGradient::zeros_like(const LinearHead& head) {
  return HeadGradient{Matrix(head.out_dim(), head.in_dim()), Vector(head.out_dim(), 0.0)};
}

void HeadGradient::add_scaled(const HeadGradient& other, double scale) {
  auto dst = d_weight.flat();
  const auto src = other.d_weight.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  for (std::size_t i = 0; i < d_bias.size(); ++i) d_bias[i] += scale * other.d_bias[i];
}

double triplet_loss(const LinearHead& head, const Triplet& triplet, double margin) {
  require_triplet_dims(head, triplet);
  const Vector a = embed(head, triplet.anchor);
  const double positive = euclidean_distance(a, embed(head, triplet.positive));
  const double negative = euclidean_distance(a, embed(head, triplet.negative));
  return std::max(0.0, margin + positive - negative);
}

HeadGradient triplet_grad(const LinearHead& head, const Triplet& triplet, double margin) {
  require_triplet_dims(head, triplet);
  HeadGradient grad = HeadGradient::zeros_like(head);
  const ForwardPass a = forward(head, triplet.anchor);
  const ForwardPass p = forward(head, triplet.positive);
  const ForwardPass n = forward(head, triplet.negative);
  const double positive = euclidean_distance(a.out, p.out);
  const double negative = euclidean_distance(a.out, n.out);
  if (margin + positive - negative <= 0.0) return grad;

  const std::size_t dim = head.out_dim();
  Vector grad_a(dim, 0.0);
  Vector grad_p(dim, 0.0);
  Vector grad_n(dim, 0.0);
  // d|a - p| / da = (a - p) / |a - p|; the subgradient at zero distance is 0.
  if (positive > 0.0) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double u = (a.out[i] - p.out[i]) / positive;
      grad_a[i] += u;
      grad_p[i] -= u;
    }
  }
  if (negative > 0.0) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double u = (a.out[i] - n.out[i]) / negative;
      grad_a[i] -= u;
      grad_n[i] += u;
    }
  }
  backward(a, triplet.anchor, grad_a, grad);
  backward(p, triplet.positive, grad_p, grad);
  backward(n, triplet.negative, grad_n, grad);
  return grad;
}

LinearHead initial_head(const PretrainConfig& config, std::size_t feature_dim) {
  Rng rng(derive_seed(config.seed, "head-init"));
  return LinearHead::uniform_init(config.embed_dim, feature_dim, config.init_scale, rng);
}

PretrainResult pretrain(const PretrainConfig& config, std::span<const SketchEpisode> episodes,
                        std::span<const Photo> photos) {
  config.validate();
  if (photos.size() < 2) throw InvalidInput("pretraining needs at least 2 photos to form negatives");
  if (episodes.empty()) throw InvalidInput("pretraining needs at least one episode");
  const std::size_t feature_dim = photos.front().features.size();
  std::unordered_map<std::string, std::size_t> photo_index;
  for (std::size_t i = 0; i < photos.size(); ++i) {
    if (photos[i].features.size() != feature_dim) throw InvalidInput("photo feature dimensions differ");
    photo_index.emplace(photos[i].id, i);
  }
  std::vector<std::size_t> paired(episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto it = photo_index.find(episodes[e].paired_photo_id);
    if (it == photo_index.end()) {
      throw InvalidInput("episode '" + episodes[e].id + "' has no paired photo feature");
    }
    if (episodes[e].states.empty()) throw InvalidInput("episode '" + episodes[e].id + "' is empty");
    paired[e] = it->second;
  }

  PretrainResult result{initial_head(config, feature_dim), {}};
  LinearHead& head = result.head;
  AdamState adam(head.weight.size() + head.bias.size(), config.adam);
  Rng rng(derive_seed(config.seed, "pretrain"));
  std::vector<std::size_t> order(episodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      HeadGradient grad = HeadGradient::zeros_like(head);
      for (std::size_t k = start; k < end; ++k) {
        const SketchEpisode& episode = episodes[order[k]];
        const std::size_t step = config.use_partial_anchors ? rng.below(episode.states.size())
                                                            : episode.states.size() - 1;
        std::size_t negative = rng.below(photos.size() - 1);
        if (negative >= paired[order[k]]) ++negative;
        const Triplet triplet{episode.states[step], photos[paired[order[k]]].features,
                              photos[negative].features};
        epoch_loss += triplet_loss(head, triplet, config.margin);
        grad.add_scaled(triplet_grad(head, triplet, config.margin), 1.0);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      adam.begin_step();
      std::vector<double> dw(grad.d_weight.flat().begin(), grad.d_weight.flat().end());
      for (double& v : dw) v *= inv;
      Vector db = grad.d_bias;
      for (double& v : db) v *= inv;
      adam.update(head.weight.flat(), dw, 0, config.lr, false);
      adam.update(head.bias, db, head.weight.size(), config.lr, false);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  head.validate();
  return result;
}

Gallery build_gallery(const LinearHead& head, std::span<const Photo> photos) {
  std::vector<std::string> ids;
  Matrix rows(photos.size(), head.out_dim());
  for (std::size_t i = 0; i < photos.size(); ++i) {
    ids.push_back(photos[i].id);
    const Vector e = embed(head, photos[i].features);
    std::copy(e.begin(), e.end(), rows.row(i).begin());
  }
  return Gallery(std::move(ids), std::move(rows));
}

}  // namespace otf
