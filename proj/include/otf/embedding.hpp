#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace otf {

class Rng;

// Fixed-dimension real vector: backbone features, embeddings and actions.
using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws InvalidInput naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> v, std::string_view what);

double l2_norm(std::span<const double> v);

// Below this norm a vector is treated as zero and normalization falls back to
// the first basis vector.
inline constexpr double kDegenerateNorm = 1e-12;

struct NormalizedVector {
  Vector values;
  bool degenerate = false;
};

NormalizedVector l2_normalize(std::span<const double> v);

enum class DistanceMetric { kEuclidean, kCosine };

double euclidean_distance(std::span<const double> u, std::span<const double> v);
// 1 - cos(u, v). Both inputs must be non-zero.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double distance(DistanceMetric metric, std::span<const double> u,
                std::span<const double> v);

// Fully connected layer y = W x + b.
struct LinearHead {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  static LinearHead zeros(std::size_t out_dim, std::size_t in_dim);
  // Weights uniform in [-scale/sqrt(in_dim), scale/sqrt(in_dim)], zero bias.
  static LinearHead uniform_init(std::size_t out_dim, std::size_t in_dim,
                                 double scale, Rng& rng);

  // Checks shapes agree and every parameter is finite.
  void validate() const;

  bool operator==(const LinearHead&) const = default;
};

// Raw affine output W x + b.
Vector affine(const LinearHead& head, std::span<const double> x);

// l2_normalize(W x + b).
Vector embed(const LinearHead& head, std::span<const double> x);

// Frozen photo embeddings with their identifiers; the retrieval search space.
class Gallery {
 public:
  static constexpr double kUnitNormTolerance = 1e-9;

  // Requires >= 2 rows, unique ids and unit-norm rows.
  Gallery(std::vector<std::string> ids, Matrix embeddings);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return embeddings_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Matrix& embeddings() const { return embeddings_; }
  std::span<const double> row(std::size_t i) const { return embeddings_.row(i); }

  // Throws InvalidInput for an unknown id.
  std::size_t index_of(std::string_view id) const;
  bool contains(std::string_view id) const;

 private:
  std::vector<std::string> ids_;
  Matrix embeddings_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace otf
