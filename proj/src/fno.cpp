#include "ksfno/fno.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ksfno/binary_io.hpp"
#include "ksfno/error.hpp"
#include "ksfno/rng.hpp"

namespace ksfno {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

const Complex* as_complex(std::span<const double> s) { return reinterpret_cast<const Complex*>(s.data()); }
Complex* as_complex(std::span<double> s) { return reinterpret_cast<Complex*>(s.data()); }

// Weight of column ky in the real inverse transform: interior columns stand
// for themselves and their conjugate mirror.
double column_multiplicity(std::size_t ky, std::size_t n) {
  return (ky == 0 || (n % 2 == 0 && ky == n / 2)) ? 1.0 : 2.0;
}

void check_modes(std::size_t modes, std::size_t n) {
  if (modes == 0 || modes > n / 2) {
    throw Error(ErrorCode::ModesExceedGrid,
                "modes = " + std::to_string(modes) + " must be in [1, " + std::to_string(n / 2) + "]");
  }
}

// Retained block of every channel's half spectrum, laid out [c][kx][ky].
std::vector<Complex> forward_blocks(const HiddenField& x, std::size_t modes, std::size_t n) {
  const std::size_t cols = n / 2 + 1;
  const std::size_t block = modes * modes;
  const std::size_t pixels = n * n;
  std::vector<Complex> half(n * cols);
  std::vector<Complex> out(static_cast<std::size_t>(x.cols()) * block);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    fft::rfft2(n, std::span<const double>(x.col(c).data(), pixels), half);
    Complex* dst = out.data() + static_cast<std::size_t>(c) * block;
    for (std::size_t kx = 0; kx < modes; ++kx) {
      for (std::size_t ky = 0; ky < modes; ++ky) dst[kx * modes + ky] = half[kx * cols + ky];
    }
  }
  return out;
}

// Inverse-transforms each channel's block (all other modes zero) and adds
// the result into the matching column of `out`.
void add_inverse_blocks(const std::vector<Complex>& blocks, std::size_t modes, std::size_t n, HiddenField& out) {
  const std::size_t cols = n / 2 + 1;
  const std::size_t block = modes * modes;
  const std::size_t pixels = n * n;
  std::vector<Complex> half(n * cols);
  std::vector<double> real(pixels);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    std::fill(half.begin(), half.end(), Complex{});
    const Complex* src = blocks.data() + static_cast<std::size_t>(c) * block;
    for (std::size_t kx = 0; kx < modes; ++kx) {
      for (std::size_t ky = 0; ky < modes; ++ky) half[kx * cols + ky] = src[kx * modes + ky];
    }
    fft::irfft2(n, half, real);
    out.col(c) += ConstVecMap(real.data(), static_cast<Eigen::Index>(pixels));
  }
}

std::size_t output_channels(std::size_t in_channels, std::size_t modes, std::size_t weight_size) {
  const std::size_t per_output = 2 * in_channels * modes * modes;
  if (per_output == 0 || weight_size % per_output != 0) {
    throw Error(ErrorCode::ShapeMismatch, "spectral weight size " + std::to_string(weight_size) +
                                              " is not a multiple of 2*in*modes^2");
  }
  return weight_size / per_output;
}

HiddenField pointwise(const HiddenField& x, std::span<const double> w, std::span<const double> b, std::size_t cin,
                      std::size_t cout) {
  const auto ci = static_cast<Eigen::Index>(cin);
  const auto co = static_cast<Eigen::Index>(cout);
  HiddenField y = x * ConstRowMap(w.data(), ci, co);
  y.rowwise() += ConstVecMap(b.data(), co).transpose();
  return y;
}

// Accumulates weight/bias gradients of a pointwise map and returns dL/dx.
HiddenField pointwise_backward(const HiddenField& x, std::span<const double> w, const HiddenField& grad_y,
                               std::span<double> grad_w, std::span<double> grad_b, std::size_t cin,
                               std::size_t cout) {
  const auto ci = static_cast<Eigen::Index>(cin);
  const auto co = static_cast<Eigen::Index>(cout);
  RowMap(grad_w.data(), ci, co).noalias() += x.transpose() * grad_y;
  VecMap(grad_b.data(), co) += grad_y.colwise().sum().transpose();
  return grad_y * ConstRowMap(w.data(), ci, co).transpose();
}

HiddenField activate(const HiddenField& z, Activation act) {
  if (act == Activation::Identity) return z;
  return z.unaryExpr([](double v) { return gelu(v); });
}

HiddenField activation_backward(const HiddenField& z, const HiddenField& grad, Activation act) {
  if (act == Activation::Identity) return grad;
  return grad.cwiseProduct(z.unaryExpr([](double v) { return gelu_grad(v); }));
}

}  // namespace

void FnoConfig::validate() const {
  if (hidden == 0) throw Error(ErrorCode::InvalidArgument, "model.hidden must be >= 1");
  if (proj_hidden == 0) throw Error(ErrorCode::InvalidArgument, "model.proj_hidden must be >= 1");
  if (in_channels == 0) throw Error(ErrorCode::InvalidArgument, "model.in_channels must be >= 1");
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "model grid size must be >= 4");
  check_modes(modes, n);
}

std::size_t param_count(const FnoConfig& cfg) {
  const std::size_t h = cfg.hidden;
  const std::size_t m = cfg.modes;
  return FnoConfig::kLayers * (2 * h * h * m * m) + FnoConfig::kLayers * (h * h + h) + (cfg.in_channels * h + h) +
         (h * cfg.proj_hidden + cfg.proj_hidden) + (cfg.proj_hidden + 1);
}

FnoParams::FnoParams(const FnoConfig& cfg) : cfg_(cfg) {
  std::size_t off = 0;
  auto take = [&off](std::size_t len) {
    const std::size_t at = off;
    off += len;
    return at;
  };
  lift_w_ = take(cfg_.in_channels * cfg_.hidden);
  lift_b_ = take(cfg_.hidden);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    spectral_[l] = take(spectral_size());
    point_w_[l] = take(cfg_.hidden * cfg_.hidden);
    point_b_[l] = take(cfg_.hidden);
  }
  proj_w1_ = take(cfg_.hidden * cfg_.proj_hidden);
  proj_b1_ = take(cfg_.proj_hidden);
  proj_w2_ = take(cfg_.proj_hidden);
  proj_b2_ = take(1);
  data_.assign(off, 0.0);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return cdf + x * pdf;
}

HiddenField build_input(const ScalarField2D& u0) {
  const std::size_t n = u0.n();
  HiddenField x(static_cast<Eigen::Index>(n * n), 3);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto p = static_cast<Eigen::Index>(i * n + j);
      x(p, 0) = u0(i, j);
      x(p, 1) = static_cast<double>(i) * inv_n;
      x(p, 2) = static_cast<double>(j) * inv_n;
    }
  }
  return x;
}

HiddenField spectral_conv(const HiddenField& x, std::span<const double> weights, std::size_t modes, std::size_t n) {
  check_modes(modes, n);
  if (static_cast<std::size_t>(x.rows()) != n * n) {
    throw Error(ErrorCode::ShapeMismatch, "hidden field rows do not match n*n");
  }
  const auto cin = static_cast<std::size_t>(x.cols());
  const std::size_t cout = output_channels(cin, modes, weights.size());
  const std::size_t block = modes * modes;

  const std::vector<Complex> xb = forward_blocks(x, modes, n);
  std::vector<Complex> yb(cout * block);
  const Complex* w = as_complex(weights);
  for (std::size_t i = 0; i < cin; ++i) {
    const Complex* xi = xb.data() + i * block;
    for (std::size_t o = 0; o < cout; ++o) {
      const Complex* wio = w + (i * cout + o) * block;
      Complex* yo = yb.data() + o * block;
      for (std::size_t k = 0; k < block; ++k) yo[k] += wio[k] * xi[k];
    }
  }

  HiddenField y = HiddenField::Zero(x.rows(), static_cast<Eigen::Index>(cout));
  add_inverse_blocks(yb, modes, n, y);
  return y;
}

void spectral_conv_backward(const HiddenField& x, std::span<const double> weights, std::size_t modes, std::size_t n,
                            const HiddenField& grad_y, HiddenField& grad_x, std::span<double> grad_w) {
  check_modes(modes, n);
  const auto cin = static_cast<std::size_t>(x.cols());
  const std::size_t cout = output_channels(cin, modes, weights.size());
  const std::size_t block = modes * modes;
  const double inv_pixels = 1.0 / static_cast<double>(n * n);

  // The real inverse transform restricted to the block is adjoint to the
  // forward transform scaled by multiplicity(ky)/n^2.
  std::vector<Complex> gb = forward_blocks(grad_y, modes, n);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t kx = 0; kx < modes; ++kx) {
      for (std::size_t ky = 0; ky < modes; ++ky) {
        gb[o * block + kx * modes + ky] *= column_multiplicity(ky, n) * inv_pixels;
      }
    }
  }

  const std::vector<Complex> xb = forward_blocks(x, modes, n);
  const Complex* w = as_complex(weights);
  Complex* gw = as_complex(grad_w);
  std::vector<Complex> gxb(cin * block);
  for (std::size_t i = 0; i < cin; ++i) {
    const Complex* xi = xb.data() + i * block;
    Complex* gxi = gxb.data() + i * block;
    for (std::size_t o = 0; o < cout; ++o) {
      const Complex* go = gb.data() + o * block;
      const Complex* wio = w + (i * cout + o) * block;
      Complex* gwio = gw + (i * cout + o) * block;
      for (std::size_t k = 0; k < block; ++k) {
        gwio[k] += std::conj(xi[k]) * go[k];
        gxi[k] += std::conj(wio[k]) * go[k];
      }
    }
  }

  // Adjoint of the forward block transform: n^2/multiplicity(ky) times the
  // real inverse transform.
  for (std::size_t i = 0; i < cin; ++i) {
    for (std::size_t kx = 0; kx < modes; ++kx) {
      for (std::size_t ky = 0; ky < modes; ++ky) {
        gxb[i * block + kx * modes + ky] *= static_cast<double>(n * n) / column_multiplicity(ky, n);
      }
    }
  }
  add_inverse_blocks(gxb, modes, n, grad_x);
}

HiddenField fourier_layer(const HiddenField& x, std::size_t layer, const FnoParams& p) {
  const FnoConfig& cfg = p.config();
  HiddenField z = pointwise(x, p.point_w(layer), p.point_b(layer), cfg.hidden, cfg.hidden);
  z += spectral_conv(x, p.spectral_w(layer), cfg.modes, cfg.n);
  return activate(z, cfg.activation);
}

ForwardTape forward_tape(const ScalarField2D& u0, const FnoParams& p) {
  const FnoConfig& cfg = p.config();
  cfg.validate();
  if (cfg.in_channels != 3) {
    throw Error(ErrorCode::ShapeMismatch, "forward needs in_channels = 3, got " + std::to_string(cfg.in_channels));
  }
  if (u0.n() != cfg.n) {
    throw Error(ErrorCode::ShapeMismatch,
                "input grid " + std::to_string(u0.n()) + " does not match model grid " + std::to_string(cfg.n));
  }

  ForwardTape tape;
  tape.input = build_input(u0);
  tape.layer_in[0] = pointwise(tape.input, p.lift_w(), p.lift_b(), cfg.in_channels, cfg.hidden);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    const HiddenField& x = tape.layer_in[l];
    HiddenField z = pointwise(x, p.point_w(l), p.point_b(l), cfg.hidden, cfg.hidden);
    z += spectral_conv(x, p.spectral_w(l), cfg.modes, cfg.n);
    tape.layer_in[l + 1] = activate(z, cfg.activation);
    tape.layer_pre[l] = std::move(z);
  }
  tape.proj_pre = pointwise(tape.layer_in[FnoConfig::kLayers], p.proj_w1(), p.proj_b1(), cfg.hidden, cfg.proj_hidden);
  tape.proj_act = activate(tape.proj_pre, cfg.activation);
  const HiddenField out = pointwise(tape.proj_act, p.proj_w2(), p.proj_b2(), cfg.proj_hidden, 1);
  tape.output.assign(out.data(), out.data() + out.size());
  return tape;
}

ScalarField2D forward(const ScalarField2D& u0, const FnoParams& p) {
  ForwardTape tape = forward_tape(u0, p);
  return ScalarField2D(u0.n(), u0.h(), std::move(tape.output));
}

FnoParams backward(const ForwardTape& tape, const FnoParams& p, std::span<const double> upstream) {
  const FnoConfig& cfg = p.config();
  if (upstream.size() != tape.output.size()) {
    throw Error(ErrorCode::ShapeMismatch, "upstream gradient must have n*n entries");
  }
  FnoParams grad(cfg);
  const auto pixels = static_cast<Eigen::Index>(upstream.size());
  const HiddenField g_out = ConstVecMap(upstream.data(), pixels);

  HiddenField g = pointwise_backward(tape.proj_act, p.proj_w2(), g_out, grad.proj_w2(), grad.proj_b2(),
                                     cfg.proj_hidden, 1);
  g = activation_backward(tape.proj_pre, g, cfg.activation);
  g = pointwise_backward(tape.layer_in[FnoConfig::kLayers], p.proj_w1(), g, grad.proj_w1(), grad.proj_b1(),
                         cfg.hidden, cfg.proj_hidden);

  for (std::size_t l = FnoConfig::kLayers; l-- > 0;) {
    const HiddenField gz = activation_backward(tape.layer_pre[l], g, cfg.activation);
    g = pointwise_backward(tape.layer_in[l], p.point_w(l), gz, grad.point_w(l), grad.point_b(l), cfg.hidden,
                           cfg.hidden);
    spectral_conv_backward(tape.layer_in[l], p.spectral_w(l), cfg.modes, cfg.n, gz, g, grad.spectral_w(l));
  }

  pointwise_backward(tape.input, p.lift_w(), g, grad.lift_w(), grad.lift_b(), cfg.in_channels, cfg.hidden);
  return grad;
}

FnoParams backward(const ScalarField2D& u0, const FnoParams& p, std::span<const double> upstream) {
  return backward(forward_tape(u0, p), p, upstream);
}

FnoParams init_params(const FnoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  FnoParams p(cfg);
  CounterRng rng(seed);
  auto fill = [&rng](std::span<double> s, double bound) {
    for (double& v : s) v = rng.next_uniform(-bound, bound);
  };
  const double lift_bound = 1.0 / std::sqrt(static_cast<double>(cfg.in_channels));
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  const double proj_bound = 1.0 / std::sqrt(static_cast<double>(cfg.proj_hidden));
  const double spectral_bound = 1.0 / static_cast<double>(cfg.hidden * cfg.hidden);

  fill(p.lift_w(), lift_bound);
  fill(p.lift_b(), lift_bound);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    fill(p.spectral_w(l), spectral_bound);
    fill(p.point_w(l), hidden_bound);
    fill(p.point_b(l), hidden_bound);
  }
  fill(p.proj_w1(), hidden_bound);
  fill(p.proj_b1(), hidden_bound);
  fill(p.proj_w2(), proj_bound);
  fill(p.proj_b2(), proj_bound);
  return p;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const FnoConfig& cfg = ckpt.params.config();
  binio::Writer w;
  w.magic("KSF1");
  w.u32(kCheckpointFormatVersion);
  w.u32(static_cast<std::uint32_t>(cfg.modes));
  w.u32(static_cast<std::uint32_t>(cfg.hidden));
  w.u32(static_cast<std::uint32_t>(cfg.in_channels));
  w.u32(static_cast<std::uint32_t>(cfg.proj_hidden));
  w.u32(static_cast<std::uint32_t>(cfg.n));
  w.u32(static_cast<std::uint32_t>(cfg.activation));
  w.u64(ckpt.seed);
  w.f64s(ckpt.params.data());
  w.seal();
  return w.bytes();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  const auto magic = r.magic();
  if (std::string_view(magic.data(), 4) != "KSF1") throw Error(ErrorCode::BadMagic, "not a KSF1 checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint format version " + std::to_string(version) + " unsupported");
  }
  binio::verify_crc(bytes);

  FnoConfig cfg;
  cfg.modes = r.u32();
  cfg.hidden = r.u32();
  cfg.in_channels = r.u32();
  cfg.proj_hidden = r.u32();
  cfg.n = r.u32();
  const std::uint32_t act = r.u32();
  if (act > static_cast<std::uint32_t>(Activation::Identity)) {
    throw Error(ErrorCode::VersionMismatch, "unknown activation id " + std::to_string(act));
  }
  cfg.activation = static_cast<Activation>(act);
  cfg.validate();
  const std::uint64_t seed = r.u64();
  if (r.remaining() != 8 * param_count(cfg) + 4) {
    throw Error(ErrorCode::ChecksumMismatch, "parameter blob size does not match header");
  }
  Checkpoint ckpt{FnoParams(cfg), seed};
  r.f64s(ckpt.params.data());
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(binio::read_file(path)); }

}  // namespace ksfno
