#include "otf/embedding.hpp"

#include <cmath>
#include <string>

#include "otf/error.hpp"
#include "otf/rng.hpp"

namespace otf {

namespace {

void require_same_dim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidInput("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                       std::to_string(v.size()));
  }
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void require_finite(std::span<const double> v, std::string_view what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + " contains a non-finite value");
  }
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

NormalizedVector l2_normalize(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("cannot normalize an empty vector");
  require_finite(v, "vector");
  NormalizedVector out;
  const double norm = l2_norm(v);
  if (norm < kDegenerateNorm) {
    out.values.assign(v.size(), 0.0);
    out.values[0] = 1.0;
    out.degenerate = true;
    return out;
  }
  out.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v[i] / norm;
  return out;
}

double euclidean_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  const double denom = l2_norm(u) * l2_norm(v);
  if (denom <= 0.0) throw InvalidInput("cosine distance of a zero vector");
  return 1.0 - dot / denom;
}

double distance(DistanceMetric metric, std::span<const double> u,
                std::span<const double> v) {
  return metric == DistanceMetric::kEuclidean ? euclidean_distance(u, v)
                                              : cosine_distance(u, v);
}

LinearHead LinearHead::zeros(std::size_t out_dim, std::size_t in_dim) {
  return LinearHead{Matrix(out_dim, in_dim), Vector(out_dim, 0.0)};
}

LinearHead LinearHead::uniform_init(std::size_t out_dim, std::size_t in_dim,
                                    double scale, Rng& rng) {
  LinearHead head = zeros(out_dim, in_dim);
  const double limit = scale / std::sqrt(static_cast<double>(in_dim));
  for (double& w : head.weight.flat()) w = rng.uniform(-limit, limit);
  return head;
}

void LinearHead::validate() const {
  if (weight.rows() == 0 || weight.cols() == 0) throw InvalidInput("linear head has an empty weight");
  if (bias.size() != weight.rows()) {
    throw InvalidInput("linear head bias length " + std::to_string(bias.size()) +
                       " does not match out_dim " + std::to_string(weight.rows()));
  }
  require_finite(weight.flat(), "linear head weight");
  require_finite(bias, "linear head bias");
}

Vector affine(const LinearHead& head, std::span<const double> x) {
  if (x.size() != head.in_dim()) {
    throw InvalidInput("input dimension " + std::to_string(x.size()) +
                       " does not match head in_dim " + std::to_string(head.in_dim()));
  }
  Vector y(head.bias);
  for (std::size_t r = 0; r < head.out_dim(); ++r) {
    const auto w = head.weight.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
  return y;
}

Vector embed(const LinearHead& head, std::span<const double> x) {
  return l2_normalize(affine(head, x)).values;
}

Gallery::Gallery(std::vector<std::string> ids, Matrix embeddings)
    : ids_(std::move(ids)), embeddings_(std::move(embeddings)) {
  if (ids_.size() < 2) throw InvalidInput("gallery needs at least 2 photos");
  if (embeddings_.rows() != ids_.size()) {
    throw InvalidInput("gallery has " + std::to_string(ids_.size()) + " ids but " +
                       std::to_string(embeddings_.rows()) + " embedding rows");
  }
  if (embeddings_.cols() == 0) throw InvalidInput("gallery embeddings are empty");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto row = embeddings_.row(i);
    require_finite(row, "gallery row");
    const double norm = l2_norm(row);
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw InvalidInput("gallery row '" + ids_[i] + "' is not unit norm (" +
                         std::to_string(norm) + ")");
    }
    if (!index_.emplace(ids_[i], i).second) {
      throw InvalidInput("duplicate gallery id '" + ids_[i] + "'");
    }
  }
}

std::size_t Gallery::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw InvalidInput("unknown photo id '" + std::string(id) + "'");
  return it->second;
}

bool Gallery::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

}  // namespace otf
