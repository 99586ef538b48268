#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otf/adam.hpp"
#include "otf/dataset.hpp"
#include "otf/embedding.hpp"

namespace otf {

// Sketch anchor with its paired (positive) and a non-paired (negative) photo.
struct Triplet {
  Vector anchor;
  Vector positive;
  Vector negative;
};

struct PretrainConfig {
  double margin = 0.3;
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double lr = 1e-4;
  std::size_t embed_dim = 64;  // D
  double init_scale = 1.0;     // see LinearHead::uniform_init
  // B2 variant: anchors are uniformly sampled intermediate steps instead of
  // the final render.
  bool use_partial_anchors = false;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HeadGradient {
  Matrix d_weight;
  Vector d_bias;

  static HeadGradient zeros_like(const LinearHead& head);
  void add_scaled(const HeadGradient& other, double scale);
};

// max(0, margin + |F(a) - F(p)| - |F(a) - F(n)|) with F = embed(head, .).
double triplet_loss(const LinearHead& head, const Triplet& triplet, double margin);

// Gradient of triplet_loss with respect to (W, b), back-propagated through the
// normalization Jacobian (I - e e^T) / |y|. Zero when the hinge is inactive;
// a zero-length distance contributes nothing.
HeadGradient triplet_grad(const LinearHead& head, const Triplet& triplet, double margin);

// Initial head used before any pretraining step.
LinearHead initial_head(const PretrainConfig& config, std::size_t feature_dim);

struct PretrainResult {
  LinearHead head;
  std::vector<double> epoch_loss;  // mean triplet loss per epoch
};

// Adam on mean mini-batch triplet loss over the episodes' anchors. Negatives
// are drawn uniformly from the non-paired photos.
PretrainResult pretrain(const PretrainConfig& config, std::span<const SketchEpisode> episodes,
                        std::span<const Photo> photos);

// Gallery with rows embed(head, photo.features), in input order.
Gallery build_gallery(const LinearHead& head, std::span<const Photo> photos);

}  // namespace otf
