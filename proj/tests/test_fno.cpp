#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "ksfno/error.hpp"
#include "ksfno/fno.hpp"
#include "ksfno/rng.hpp"
#include "test_support.hpp"

namespace ksfno {
namespace {

using testing::oracle_spectral_conv;
using testing::random_field;

FnoConfig tiny_config(Activation act = Activation::Gelu) {
  return FnoConfig{.modes = 2, .hidden = 2, .in_channels = 3, .proj_hidden = 4, .n = 8, .activation = act};
}

HiddenField random_hidden(std::size_t pixels, std::size_t channels, std::uint64_t seed) {
  CounterRng rng(seed);
  HiddenField x(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(channels));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index p = 0; p < x.rows(); ++p) x(p, c) = rng.next_uniform(-1.0, 1.0);
  }
  return x;
}

std::vector<double> random_vector(std::size_t size, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  std::vector<double> v(size);
  for (double& x : v) x = rng.next_uniform(-scale, scale);
  return v;
}

TEST(ParamCount, FullSizeCounts) {
  EXPECT_EQ(param_count(FnoConfig{.modes = 12, .hidden = 64, .in_channels = 3, .proj_hidden = 128}), 4'743'937u);
  EXPECT_EQ(param_count(FnoConfig{.modes = 24, .hidden = 64, .in_channels = 3, .proj_hidden = 128}), 18'899'713u);
  EXPECT_EQ(param_count(FnoConfig{.modes = 1, .hidden = 1, .in_channels = 1, .proj_hidden = 1}), 22u);
}

TEST(FnoParams, LayoutCoversEveryScalarOnce) {
  const FnoConfig cfg = tiny_config();
  FnoParams p(cfg);
  EXPECT_EQ(p.size(), param_count(cfg));
  EXPECT_EQ(p.lift_w().data(), p.data().data());
  EXPECT_EQ(p.proj_b2().data() + 1, p.data().data() + p.size());
  EXPECT_EQ(p.spectral_w(1).data(), p.point_b(0).data() + cfg.hidden);
}

TEST(BuildInput, Channels) {
  const HiddenField zero = build_input(ScalarField2D(4));
  EXPECT_EQ(zero.cols(), 3);
  EXPECT_EQ(zero.col(0).cwiseAbs().maxCoeff(), 0.0);
  // Point (3, 2) on a 4x4 grid.
  EXPECT_DOUBLE_EQ(zero(3 * 4 + 2, 1), 0.75);
  EXPECT_DOUBLE_EQ(zero(3 * 4 + 2, 2), 0.5);

  const ScalarField2D u = random_field(8, 3);
  const HiddenField x = build_input(u);
  EXPECT_EQ(x(0, 0), u(0, 0));
  EXPECT_EQ(x(0, 1), 0.0);
  EXPECT_EQ(x(0, 2), 0.0);
}

TEST(SpectralConv, ZeroWeightsGiveZero) {
  const HiddenField x = random_hidden(64, 2, 1);
  const std::vector<double> w(2 * 2 * 2 * 4, 0.0);
  EXPECT_EQ(spectral_conv(x, w, 2, 8).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SpectralConv, IdentityOnRetainedPlanarWave) {
  const std::size_t n = 8, m = 2;
  HiddenField plus(64, 1), minus(64, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double phase = 2.0 * std::numbers::pi / n;
      plus(static_cast<Eigen::Index>(i * n + j), 0) = std::cos(phase * static_cast<double>(i + j));
      minus(static_cast<Eigen::Index>(i * n + j), 0) = std::cos(phase * (static_cast<double>(i) - j));
    }
  }
  std::vector<double> w(2 * m * m, 0.0);
  for (std::size_t k = 0; k < m * m; ++k) w[2 * k] = 1.0;
  // Energy at (1, 1) lies inside the retained corner and passes unchanged.
  EXPECT_LT((spectral_conv(plus, w, m, n) - plus).cwiseAbs().maxCoeff(), 1e-12);
  // Energy at (1, -1) sits in row n-1 of the half spectrum, outside the corner.
  EXPECT_LT(spectral_conv(minus, w, m, n).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralConv, MatchesAssembledDenseLinearMap) {
  const std::size_t n = 8, m = 2, c = 2, pixels = n * n;
  const std::vector<double> w = random_vector(2 * c * c * m * m, 77);

  // Column q of the dense map is the oracle applied to unit input q.
  const std::size_t dim = c * pixels;
  std::vector<double> dense(dim * dim);
  for (std::size_t q = 0; q < dim; ++q) {
    HiddenField e = HiddenField::Zero(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(c));
    e(static_cast<Eigen::Index>(q % pixels), static_cast<Eigen::Index>(q / pixels)) = 1.0;
    const HiddenField col = oracle_spectral_conv(e, w, m, n);
    for (std::size_t r = 0; r < dim; ++r) {
      dense[r * dim + q] = col(static_cast<Eigen::Index>(r % pixels), static_cast<Eigen::Index>(r / pixels));
    }
  }

  const HiddenField x = random_hidden(pixels, c, 5);
  const HiddenField y = spectral_conv(x, w, m, n);
  double worst = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    double s = 0.0;
    for (std::size_t q = 0; q < dim; ++q) {
      s += dense[r * dim + q] * x(static_cast<Eigen::Index>(q % pixels), static_cast<Eigen::Index>(q / pixels));
    }
    worst = std::max(worst, std::abs(s - y(static_cast<Eigen::Index>(r % pixels), static_cast<Eigen::Index>(r / pixels))));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(SpectralConv, RejectsModesBeyondGrid) {
  const HiddenField x = random_hidden(64, 1, 1);
  const std::vector<double> w(2 * 5 * 5, 0.0);
  try {
    spectral_conv(x, w, 5, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModesExceedGrid);
  }
  const FnoConfig too_many{.modes = 5, .hidden = 1, .in_channels = 3, .proj_hidden = 1, .n = 8};
  EXPECT_THROW(too_many.validate(), Error);
}

TEST(SpectralConv, OutputHasNoImaginaryResidueInFullComplexPath) {
  // Debug path: extend the projected half spectrum of a random block to the
  // full two-sided grid, invert with a complex DFT, and check realness.
  const std::size_t n = 8, m = 3;
  CounterRng rng(4);
  std::vector<Complex> half(n * (n / 2 + 1));
  for (std::size_t kx = 0; kx < m; ++kx) {
    for (std::size_t ky = 0; ky < m; ++ky) half[kx * (n / 2 + 1) + ky] = {rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
  }
  std::vector<Complex> scratch = half;
  std::vector<double> real(n * n);
  fft::irfft2(n, scratch, real);
  // irfft2 projected `scratch` in place before inverting; rebuild the full
  // spectrum from the projected copy.
  std::vector<Complex> projected = half;
  for (std::size_t kx = 0; kx <= n / 2; ++kx) {
    for (std::size_t col : {std::size_t{0}, n / 2}) {
      const std::size_t mirror = (n - kx) % n;
      Complex& a = projected[kx * (n / 2 + 1) + col];
      Complex& b = projected[mirror * (n / 2 + 1) + col];
      const Complex s = mirror == kx ? Complex(a.real(), 0.0) : 0.5 * (a + std::conj(b));
      a = s;
      if (mirror != kx) b = std::conj(s);
    }
  }
  double worst_imag = 0.0, worst_real = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      Complex s{};
      for (std::size_t kx = 0; kx < n; ++kx) {
        for (std::size_t ky = 0; ky < n; ++ky) {
          const Complex c = ky <= n / 2 ? projected[kx * (n / 2 + 1) + ky]
                                        : std::conj(projected[((n - kx) % n) * (n / 2 + 1) + (n - ky)]);
          s += c * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(kx * a + ky * b) / n);
        }
      }
      s /= static_cast<double>(n * n);
      worst_imag = std::max(worst_imag, std::abs(s.imag()));
      worst_real = std::max(worst_real, std::abs(s.real() - real[a * n + b]));
    }
  }
  EXPECT_LT(worst_imag, 1e-12);
  EXPECT_LT(worst_real, 1e-12);
}

// Straight-line reimplementation of one Fourier layer.
HiddenField oracle_fourier_layer(const HiddenField& x, std::size_t layer, const FnoParams& p) {
  const FnoConfig& cfg = p.config();
  const HiddenField spec = oracle_spectral_conv(x, p.spectral_w(layer), cfg.modes, cfg.n);
  HiddenField y(x.rows(), static_cast<Eigen::Index>(cfg.hidden));
  for (Eigen::Index px = 0; px < x.rows(); ++px) {
    for (std::size_t o = 0; o < cfg.hidden; ++o) {
      double z = p.point_b(layer)[o] + spec(px, static_cast<Eigen::Index>(o));
      for (std::size_t i = 0; i < cfg.hidden; ++i) z += x(px, static_cast<Eigen::Index>(i)) * p.point_w(layer)[i * cfg.hidden + o];
      y(px, static_cast<Eigen::Index>(o)) = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
    }
  }
  return y;
}

TEST(FourierLayer, ZeroWeightsAndLargePositiveAsymptote) {
  const FnoConfig cfg = tiny_config();
  FnoParams zero(cfg);
  const HiddenField x = random_hidden(64, 2, 3);
  EXPECT_EQ(fourier_layer(x, 0, zero).cwiseAbs().maxCoeff(), 0.0);

  FnoParams ident(cfg);
  ident.point_w(2)[0] = 1.0;
  ident.point_w(2)[3] = 1.0;
  const HiddenField big = (random_hidden(64, 2, 4).array() + 11.0).matrix();
  EXPECT_LT((fourier_layer(big, 2, ident) - big).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierLayer, MatchesStraightLineOracle) {
  const FnoParams p = init_params(tiny_config(), 12);
  const HiddenField x = random_hidden(64, 2, 13);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    EXPECT_LT((fourier_layer(x, l, p) - oracle_fourier_layer(x, l, p)).cwiseAbs().maxCoeff(), 1e-10) << l;
  }
}

TEST(Forward, ZeroParamsAndDeterminism) {
  const FnoConfig cfg = tiny_config();
  const ScalarField2D u = random_field(8, 21);
  EXPECT_EQ(forward(u, FnoParams(cfg)).max_abs(), 0.0);

  const FnoParams p = init_params(cfg, 5);
  EXPECT_EQ(forward(u, p), forward(u, p));
  EXPECT_THROW(forward(random_field(16, 1), p), Error);
}

// Central differences on every parameter of loss = <weights, output>.
struct GradCheckResult {
  double worst_excess = 0.0;  // max of |a - fd| - (abs_tol + rel_tol*max(|a|,|fd|)); <= 0 passes
  std::size_t checked = 0;
};

GradCheckResult gradient_check(const FnoParams& p, const ScalarField2D& u, std::span<const double> weights) {
  const FnoParams analytic = backward(u, p, weights);
  auto loss = [&](const FnoParams& q) {
    const ScalarField2D y = forward(u, q);
    return std::inner_product(weights.begin(), weights.end(), y.values().begin(), 0.0);
  };
  GradCheckResult r;
  r.worst_excess = -1.0;
  const double step = 1e-4;
  FnoParams q = p;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = q.data()[k];
    q.data()[k] = orig + step;
    const double up = loss(q);
    q.data()[k] = orig - step;
    const double down = loss(q);
    q.data()[k] = orig;
    const double fd = (up - down) / (2.0 * step);
    const double a = analytic.data()[k];
    const double allowed = 1e-7 + 1e-4 * std::max(std::abs(a), std::abs(fd));
    r.worst_excess = std::max(r.worst_excess, std::abs(a - fd) - allowed);
    ++r.checked;
  }
  return r;
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  const FnoParams p = init_params(tiny_config(), 1);
  const std::vector<double> zero(64, 0.0);
  const FnoParams g = backward(random_field(8, 2), p, zero);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MatchesCentralDifferencesAtSinglePixel) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const FnoParams p = init_params(tiny_config(), seed);
    std::vector<double> pick(64, 0.0);
    pick[(seed * 13) % 64] = 1.0;
    const GradCheckResult r = gradient_check(p, random_field(8, 50 + seed, 0.0, 1.0), pick);
    EXPECT_EQ(r.checked, p.size());
    EXPECT_LE(r.worst_excess, 0.0) << "seed " << seed;
  }
}

TEST(Backward, MatchesCentralDifferencesForDenseUpstream) {
  // Larger spectral weights so the Fourier path carries real signal.
  FnoParams p = init_params(tiny_config(), 9);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (double& v : p.spectral_w(l)) v *= 20.0;
  }
  const GradCheckResult r = gradient_check(p, random_field(8, 60, 0.0, 1.0), random_vector(64, 61));
  EXPECT_LE(r.worst_excess, 0.0);
}

TEST(Backward, LinearSubmodelMatchesNormalEquationGradient) {
  // With identity activations the output is affine in each weight tensor:
  // y = A*theta + c. For loss 1/2 ||y - t||^2 the gradient is A^T (y - t).
  const FnoConfig cfg = tiny_config(Activation::Identity);
  FnoParams p = init_params(cfg, 31);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (double& v : p.spectral_w(l)) v *= 10.0;
  }
  const ScalarField2D u = random_field(8, 32, 0.0, 1.0);
  const std::vector<double> target = random_vector(64, 33);
  const ScalarField2D y = forward(u, p);
  std::vector<double> residual(64);
  for (std::size_t k = 0; k < 64; ++k) residual[k] = y.values()[k] - target[k];
  const FnoParams grad = backward(u, p, residual);

  auto check_tensor = [&](auto select) {
    FnoParams base = p;
    std::span<double> theta = select(base);
    const std::span<const double> analytic = select(const_cast<FnoParams&>(grad));
    // Column j of A: response to a unit change of theta_j.
    const ScalarField2D y0 = forward(u, base);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double orig = theta[j];
      theta[j] = orig + 1.0;
      const ScalarField2D y1 = forward(u, base);
      theta[j] = orig;
      double g = 0.0;
      for (std::size_t k = 0; k < 64; ++k) g += (y1.values()[k] - y0.values()[k]) * residual[k];
      EXPECT_NEAR(analytic[j], g, 1e-8 * std::max(1.0, std::abs(g))) << j;
    }
  };
  check_tensor([](FnoParams& q) { return q.proj_w2(); });
  check_tensor([](FnoParams& q) { return q.spectral_w(1); });
  check_tensor([](FnoParams& q) { return q.lift_w(); });
}

TEST(InitParams, DeterministicBoundedAndComplete) {
  const FnoConfig tiny = tiny_config();
  EXPECT_EQ(init_params(tiny, 3), init_params(tiny, 3));
  EXPECT_NE(init_params(tiny, 3), init_params(tiny, 4));

  const FnoConfig full{.modes = 12, .hidden = 64, .in_channels = 3, .proj_hidden = 128, .n = 128};
  const FnoParams p = init_params(full, 1);
  EXPECT_EQ(p.size(), 4'743'937u);
  double worst = 0.0;
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (double v : p.spectral_w(l)) worst = std::max(worst, std::abs(v));
  }
  EXPECT_LE(worst, 1.0 / 4096.0);
  EXPECT_GT(worst, 0.9 / 4096.0);
  for (double v : p.point_w(0)) EXPECT_LE(std::abs(v), 1.0 / 8.0);
}

TEST(Invariants, ModeTruncationIsAProjection) {
  const FnoConfig small{.modes = 4, .hidden = 3, .in_channels = 3, .proj_hidden = 5, .n = 16};
  FnoConfig large = small;
  large.modes = 8;
  const FnoParams ps = init_params(small, 70);
  FnoParams pl(large);
  auto copy = [](std::span<const double> from, std::span<double> to) { std::copy(from.begin(), from.end(), to.begin()); };
  copy(ps.lift_w(), pl.lift_w());
  copy(ps.lift_b(), pl.lift_b());
  copy(ps.proj_w1(), pl.proj_w1());
  copy(ps.proj_b1(), pl.proj_b1());
  copy(ps.proj_w2(), pl.proj_w2());
  copy(ps.proj_b2(), pl.proj_b2());
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    copy(ps.point_w(l), pl.point_w(l));
    copy(ps.point_b(l), pl.point_b(l));
    const auto ws = ps.spectral_w(l);
    auto wl = pl.spectral_w(l);
    for (std::size_t io = 0; io < 9; ++io) {
      for (std::size_t kx = 0; kx < 4; ++kx) {
        for (std::size_t ky = 0; ky < 4; ++ky) {
          for (std::size_t part = 0; part < 2; ++part) {
            wl[2 * ((io * 8 + kx) * 8 + ky) + part] = ws[2 * ((io * 4 + kx) * 4 + ky) + part] * 30.0;
          }
        }
      }
    }
  }
  FnoParams ps_scaled = ps;
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (double& v : ps_scaled.spectral_w(l)) v *= 30.0;
  }
  const ScalarField2D u = random_field(16, 71, 0.0, 1.0);
  EXPECT_LT(testing::max_abs_diff(forward(u, ps_scaled).values(), forward(u, pl).values()), 1e-10);
}

TEST(Invariants, HiddenChannelPermutationEquivariance) {
  const FnoConfig cfg{.modes = 3, .hidden = 4, .in_channels = 3, .proj_hidden = 5, .n = 8};
  FnoParams p = init_params(cfg, 80);
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (double& v : p.spectral_w(l)) v *= 20.0;
  }
  const std::array<std::size_t, 4> perm{2, 0, 3, 1};
  const std::size_t h = cfg.hidden, block = cfg.modes * cfg.modes;
  FnoParams q(cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t o = 0; o < h; ++o) q.lift_w()[i * h + perm[o]] = p.lift_w()[i * h + o];
  }
  for (std::size_t o = 0; o < h; ++o) q.lift_b()[perm[o]] = p.lift_b()[o];
  for (std::size_t l = 0; l < FnoConfig::kLayers; ++l) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t o = 0; o < h; ++o) {
        q.point_w(l)[perm[i] * h + perm[o]] = p.point_w(l)[i * h + o];
        for (std::size_t k = 0; k < 2 * block; ++k) {
          q.spectral_w(l)[(perm[i] * h + perm[o]) * 2 * block + k] = p.spectral_w(l)[(i * h + o) * 2 * block + k];
        }
      }
      q.point_b(l)[perm[i]] = p.point_b(l)[i];
    }
  }
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t o = 0; o < cfg.proj_hidden; ++o) {
      q.proj_w1()[perm[i] * cfg.proj_hidden + o] = p.proj_w1()[i * cfg.proj_hidden + o];
    }
  }
  std::copy(p.proj_b1().begin(), p.proj_b1().end(), q.proj_b1().begin());
  std::copy(p.proj_w2().begin(), p.proj_w2().end(), q.proj_w2().begin());
  q.proj_b2()[0] = p.proj_b2()[0];

  const ScalarField2D u = random_field(8, 81, 0.0, 1.0);
  EXPECT_LT(testing::max_abs_diff(forward(u, p).values(), forward(u, q).values()), 1e-10);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  const Checkpoint ck{init_params(tiny_config(), 44), 44};
  const auto bytes = encode_checkpoint(ck);
  EXPECT_EQ(bytes.size(), 4u + 4 + 6 * 4 + 8 + 8 * param_count(tiny_config()) + 4);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.seed, 44u);

  auto bad = bytes;
  bad[1] = 'Z';
  try {
    decode_checkpoint(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadMagic);
  }
  auto flipped = bytes;
  flipped[60] ^= 1;
  try {
    decode_checkpoint(flipped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChecksumMismatch);
  }
}

}  // namespace
}  // namespace ksfno
