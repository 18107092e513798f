#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ksfno/field.hpp"

namespace ksfno {

enum class Activation : std::uint32_t {
  Gelu = 0,
  /// Makes the whole network multilinear in its weights; used by tests that
  /// compare against closed-form gradients.
  Identity = 1,
};

struct FnoConfig {
  static constexpr std::size_t kLayers = 4;

  std::size_t modes = 12;  // retained modes per axis
  std::size_t hidden = 64;
  std::size_t in_channels = 3;  // value, x/n, y/n
  std::size_t proj_hidden = 128;
  std::size_t n = 128;
  Activation activation = Activation::Gelu;

  /// Throws ModesExceedGrid when modes > n/2, InvalidArgument for zero sizes.
  void validate() const;

  friend bool operator==(const FnoConfig&, const FnoConfig&) = default;
};

/// Closed form: 4*(2*hidden^2*m^2) + 4*(hidden^2 + hidden) + (in*hidden + hidden)
///            + (hidden*proj + proj) + (proj + 1).
std::size_t param_count(const FnoConfig& cfg);

/// Every trainable scalar in one contiguous blob, in canonical order:
///   lift_w [in][hidden], lift_b [hidden],
///   per layer l = 0..3: spectral_w [i][o][kx][ky][re, im], point_w [i][o], point_b [o],
///   proj_w1 [hidden][proj], proj_b1 [proj], proj_w2 [proj], proj_b2 [1].
/// The same type holds parameter gradients.
class FnoParams {
 public:
  explicit FnoParams(const FnoConfig& cfg);

  const FnoConfig& config() const noexcept { return cfg_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> lift_w() { return slice(lift_w_, cfg_.in_channels * cfg_.hidden); }
  std::span<double> lift_b() { return slice(lift_b_, cfg_.hidden); }
  std::span<double> spectral_w(std::size_t layer) { return slice(spectral_[layer], spectral_size()); }
  std::span<double> point_w(std::size_t layer) { return slice(point_w_[layer], cfg_.hidden * cfg_.hidden); }
  std::span<double> point_b(std::size_t layer) { return slice(point_b_[layer], cfg_.hidden); }
  std::span<double> proj_w1() { return slice(proj_w1_, cfg_.hidden * cfg_.proj_hidden); }
  std::span<double> proj_b1() { return slice(proj_b1_, cfg_.proj_hidden); }
  std::span<double> proj_w2() { return slice(proj_w2_, cfg_.proj_hidden); }
  std::span<double> proj_b2() { return slice(proj_b2_, 1); }

  std::span<const double> lift_w() const { return cslice(lift_w_, cfg_.in_channels * cfg_.hidden); }
  std::span<const double> lift_b() const { return cslice(lift_b_, cfg_.hidden); }
  std::span<const double> spectral_w(std::size_t layer) const { return cslice(spectral_[layer], spectral_size()); }
  std::span<const double> point_w(std::size_t layer) const { return cslice(point_w_[layer], cfg_.hidden * cfg_.hidden); }
  std::span<const double> point_b(std::size_t layer) const { return cslice(point_b_[layer], cfg_.hidden); }
  std::span<const double> proj_w1() const { return cslice(proj_w1_, cfg_.hidden * cfg_.proj_hidden); }
  std::span<const double> proj_b1() const { return cslice(proj_b1_, cfg_.proj_hidden); }
  std::span<const double> proj_w2() const { return cslice(proj_w2_, cfg_.proj_hidden); }
  std::span<const double> proj_b2() const { return cslice(proj_b2_, 1); }

  /// Real scalars per spectral weight tensor: 2 * hidden^2 * modes^2.
  std::size_t spectral_size() const noexcept { return 2 * cfg_.hidden * cfg_.hidden * cfg_.modes * cfg_.modes; }

  friend bool operator==(const FnoParams& a, const FnoParams& b) { return a.cfg_ == b.cfg_ && a.data_ == b.data_; }

 private:
  std::span<double> slice(std::size_t off, std::size_t len) { return std::span<double>(data_).subspan(off, len); }
  std::span<const double> cslice(std::size_t off, std::size_t len) const {
    return std::span<const double>(data_).subspan(off, len);
  }

  FnoConfig cfg_;
  std::size_t lift_w_ = 0, lift_b_ = 0;
  std::array<std::size_t, FnoConfig::kLayers> spectral_{}, point_w_{}, point_b_{};
  std::size_t proj_w1_ = 0, proj_b1_ = 0, proj_w2_ = 0, proj_b2_ = 0;
  std::vector<double> data_;
};

/// Activations over the grid: one row per pixel (row-major pixel index
/// i*n + j), one column per channel.
using HiddenField = Eigen::MatrixXd;

/// Channels (u0, x/n, y/n).
HiddenField build_input(const ScalarField2D& u0);

/// Truncated spectral convolution. `weights` holds [i][o][kx][ky][re, im] for
/// the retained block kx, ky in [0, modes) of each channel's half spectrum;
/// every other mode of the output is zero. The output channel count is
/// implied by the weight size.
HiddenField spectral_conv(const HiddenField& x, std::span<const double> weights, std::size_t modes, std::size_t n);

/// Adjoint of spectral_conv with respect to both the input and the weights.
/// `grad_x` and `grad_w` are accumulated into, not overwritten.
void spectral_conv_backward(const HiddenField& x, std::span<const double> weights, std::size_t modes, std::size_t n,
                            const HiddenField& grad_y, HiddenField& grad_x, std::span<double> grad_w);

/// act(x * point_w + point_b + spectral_conv(x)).
HiddenField fourier_layer(const HiddenField& x, std::size_t layer, const FnoParams& p);

/// Intermediate values needed by backward().
struct ForwardTape {
  HiddenField input;                               // P x in_channels
  std::array<HiddenField, FnoConfig::kLayers + 1> layer_in;  // lifted field, then each layer's output
  std::array<HiddenField, FnoConfig::kLayers> layer_pre;     // pre-activation of each layer
  HiddenField proj_pre;                            // P x proj_hidden
  HiddenField proj_act;
  std::vector<double> output;                      // P values
};

ForwardTape forward_tape(const ScalarField2D& u0, const FnoParams& p);
ScalarField2D forward(const ScalarField2D& u0, const FnoParams& p);

/// Reverse-mode gradient of a scalar loss given dLoss/dOutput (n*n values).
FnoParams backward(const ForwardTape& tape, const FnoParams& p, std::span<const double> upstream);
FnoParams backward(const ScalarField2D& u0, const FnoParams& p, std::span<const double> upstream);

/// Spectral entries Uniform(-s, s) per component with s = 1/hidden^2; every
/// pointwise weight and bias Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
FnoParams init_params(const FnoConfig& cfg, std::uint64_t seed);

double gelu(double x);
double gelu_grad(double x);

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  FnoParams params;
  std::uint64_t seed = 0;
};

/// KSF1 layout, little-endian:
///   "KSF1" | version u32 | modes, hidden, in_channels, proj_hidden, n,
///   activation (u32 each) | seed u64 | parameter blob f64 in canonical order | CRC32
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ksfno
