#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mep/matrix.hpp"
#include "mep/spectral.hpp"

namespace mep {

/// Unit-norm speaker embedding.
using Embedding = std::vector<double>;

/// Fully connected layer, weights out x in.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
};

/// Deterministic, untrained speaker encoder: two per-frame tanh layers,
/// mean + standard-deviation pooling over frames, a linear projection and
/// L2 normalization.
class EncoderState {
 public:
  static constexpr std::size_t kHidden = 128;
  static constexpr std::size_t kEmbedding = 64;
  /// Added to the pooled variance before the square root.
  static constexpr double kVarianceFloor = 1e-10;

  explicit EncoderState(std::uint64_t seed, std::size_t input_channels = 80);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_channels() const noexcept { return frame1_.weights.cols(); }
  const DenseLayer& frame_layer1() const noexcept { return frame1_; }
  const DenseLayer& frame_layer2() const noexcept { return frame2_; }
  const DenseLayer& projection() const noexcept { return projection_; }

  /// FNV-1a over the raw weight bytes; equal seeds give equal checksums.
  std::uint64_t checksum() const;

 private:
  std::uint64_t seed_;
  DenseLayer frame1_;
  DenseLayer frame2_;
  DenseLayer projection_;
};

inline EncoderState init_encoder(std::uint64_t seed) { return EncoderState(seed); }

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  Matrix hidden1;  ///< frames x H
  Matrix hidden2;  ///< frames x H
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> projected;  ///< pre-normalization embedding
  double norm = 0.0;
  Embedding embedding;
};

ForwardTrace forward_trace(const EncoderState& enc, const Matrix& log_mel);
Embedding forward(const EncoderState& enc, const Matrix& log_mel);
Embedding forward(const EncoderState& enc, const MelFeatures& features);

/// Embedding of a power spectrum through the log-mel front end.
Embedding embed(const EncoderState& enc, const Matrix& energy, const MelFilterbank& fb);

/// Rescales y to unit norm; throws kDegenerateEmbedding for a zero vector.
Embedding normalize(std::span<const double> y);

/// 1 - cos(e, y) for unit vectors.
double loss(std::span<const double> e, std::span<const double> y);

/// Gradient of loss(forward(log_mel), y) with respect to log_mel.
Matrix grad_log_mel(const EncoderState& enc, const ForwardTrace& trace, std::span<const double> y);

struct LossGradient {
  double loss = 0.0;
  Matrix grad;  ///< frames x bins
};

/// Loss at the given power spectrum and its exact gradient with respect to
/// every energy x[m,k].
LossGradient grad_power(const EncoderState& enc, const Matrix& energy, std::span<const double> y,
                        const MelFilterbank& fb);

}  // namespace mep
