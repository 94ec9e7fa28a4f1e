#include "splatinit/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "splatinit/parallel.hpp"

namespace splatinit {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::domain_error(std::string(op) + ": image shapes differ");
  }
}

constexpr int kHalf = 5;  // 11-tap window
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 11>& window_taps() {
  static const std::array<double, 11> taps = [] {
    std::array<double, 11> w{};
    double sum = 0.0;
    for (int k = 0; k < 11; ++k) {
      const double d = k - kHalf;
      w[static_cast<size_t>(k)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += w[static_cast<size_t>(k)];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return taps;
}

// Per-position inverse of the clipped window mass along one axis, so border
// windows renormalize to 1. The 2D renormalization factorizes because the
// window is separable and clipping is axis-aligned.
std::vector<double> axis_norms(int length) {
  const auto& w = window_taps();
  std::vector<double> inv(static_cast<size_t>(length));
  for (int p = 0; p < length; ++p) {
    double s = 0.0;
    for (int k = -kHalf; k <= kHalf; ++k) {
      const int q = p + k;
      if (q >= 0 && q < length) s += w[static_cast<size_t>(k + kHalf)];
    }
    inv[static_cast<size_t>(p)] = 1.0 / s;
  }
  return inv;
}

// Horizontal clipped-renormalized Gaussian filter of an interleaved image.
void conv_rows(const Image& in, const std::vector<double>& inv_x, Image& out) {
  const auto& w = window_taps();
  const int width = in.width, channels = in.channels;
  parallel_for_slices(in.height, [&](int, std::int64_t y0, std::int64_t y1) {
    for (std::int64_t y = y0; y < y1; ++y) {
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < channels; ++c) {
          double s = 0.0;
          for (int k = std::max(-kHalf, -x); k <= std::min(kHalf, width - 1 - x); ++k) {
            s += w[static_cast<size_t>(k + kHalf)] *
                 in.at(x + k, static_cast<int>(y), c);
          }
          out.at(x, static_cast<int>(y), c) = s * inv_x[static_cast<size_t>(x)];
        }
      }
    }
  });
}

// Vertical pass; together with conv_rows this is the full 2D window.
void conv_cols(const Image& in, const std::vector<double>& inv_y, Image& out) {
  const auto& w = window_taps();
  const int width = in.width, height = in.height, channels = in.channels;
  parallel_for_slices(height, [&](int, std::int64_t y0, std::int64_t y1) {
    for (std::int64_t y = y0; y < y1; ++y) {
      const int iy = static_cast<int>(y);
      const double norm = inv_y[static_cast<size_t>(y)];
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < channels; ++c) {
          double s = 0.0;
          for (int k = std::max(-kHalf, -iy); k <= std::min(kHalf, height - 1 - iy); ++k) {
            s += w[static_cast<size_t>(k + kHalf)] * in.at(x, iy + k, c);
          }
          out.at(x, iy, c) = s * norm;
        }
      }
    }
  });
}

// Adjoint of the horizontal pass: scatters instead of gathers, i.e. the
// renormalization factor is indexed by the source window position.
void adj_rows(const Image& in, const std::vector<double>& inv_x, Image& out) {
  const auto& w = window_taps();
  const int width = in.width, channels = in.channels;
  parallel_for_slices(in.height, [&](int, std::int64_t y0, std::int64_t y1) {
    for (std::int64_t y = y0; y < y1; ++y) {
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < channels; ++c) {
          double s = 0.0;
          for (int k = std::max(-kHalf, -x); k <= std::min(kHalf, width - 1 - x); ++k) {
            s += w[static_cast<size_t>(-k + kHalf)] * inv_x[static_cast<size_t>(x + k)] *
                 in.at(x + k, static_cast<int>(y), c);
          }
          out.at(x, static_cast<int>(y), c) = s;
        }
      }
    }
  });
}

void adj_cols(const Image& in, const std::vector<double>& inv_y, Image& out) {
  const auto& w = window_taps();
  const int width = in.width, height = in.height, channels = in.channels;
  parallel_for_slices(height, [&](int, std::int64_t y0, std::int64_t y1) {
    for (std::int64_t y = y0; y < y1; ++y) {
      const int iy = static_cast<int>(y);
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < channels; ++c) {
          double s = 0.0;
          for (int k = std::max(-kHalf, -iy); k <= std::min(kHalf, height - 1 - iy); ++k) {
            s += w[static_cast<size_t>(-k + kHalf)] * inv_y[static_cast<size_t>(iy + k)] *
                 in.at(x, iy + k, c);
          }
          out.at(x, iy, c) = s;
        }
      }
    }
  });
}

void windowed(const Image& in, const std::vector<double>& inv_x,
              const std::vector<double>& inv_y, Image& tmp, Image& out) {
  conv_rows(in, inv_x, tmp);
  conv_cols(tmp, inv_y, out);
}

void windowed_adjoint(const Image& in, const std::vector<double>& inv_x,
                      const std::vector<double>& inv_y, Image& tmp, Image& out) {
  adj_cols(in, inv_y, tmp);
  adj_rows(tmp, inv_x, out);
}

Image elementwise_product(const Image& a, const Image& b) {
  Image out(a.width, a.height, a.channels);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double sse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const std::vector<double> inv_x = axis_norms(a.width);
  const std::vector<double> inv_y = axis_norms(a.height);
  Image tmp(a.width, a.height, a.channels);
  Image mu_a(a.width, a.height, a.channels), mu_b = mu_a, e_aa = mu_a, e_bb = mu_a,
        e_ab = mu_a;
  windowed(a, inv_x, inv_y, tmp, mu_a);
  windowed(b, inv_x, inv_y, tmp, mu_b);
  windowed(elementwise_product(a, a), inv_x, inv_y, tmp, e_aa);
  windowed(elementwise_product(b, b), inv_x, inv_y, tmp, e_bb);
  windowed(elementwise_product(a, b), inv_x, inv_y, tmp, e_ab);

  double total = 0.0;
  for (size_t i = 0; i < mu_a.data.size(); ++i) {
    const double ma = mu_a.data[i], mb = mu_b.data[i];
    const double va = e_aa.data[i] - ma * ma;
    const double vb = e_bb.data[i] - mb * mb;
    const double cov = e_ab.data[i] - ma * mb;
    const double a1 = 2.0 * ma * mb + kC1, a2 = 2.0 * cov + kC2;
    const double b1 = ma * ma + mb * mb + kC1, b2 = va + vb + kC2;
    total += (a1 * a2) / (b1 * b2);
  }
  return total / static_cast<double>(mu_a.data.size());
}

SsimReference make_ssim_reference(const Image& b) {
  SsimReference ref;
  ref.image = b;
  ref.inv_x = axis_norms(b.width);
  ref.inv_y = axis_norms(b.height);
  Image tmp(b.width, b.height, b.channels);
  ref.mu = Image(b.width, b.height, b.channels);
  ref.e_sq = Image(b.width, b.height, b.channels);
  windowed(b, ref.inv_x, ref.inv_y, tmp, ref.mu);
  windowed(elementwise_product(b, b), ref.inv_x, ref.inv_y, tmp, ref.e_sq);
  return ref;
}

SsimGradResult ssim_with_gradient(const Image& a, const Image& b) {
  return ssim_with_gradient(a, make_ssim_reference(b));
}

SsimGradResult ssim_with_gradient(const Image& a, const SsimReference& ref) {
  const Image& b = ref.image;
  require_same_shape(a, b, "ssim");
  const std::vector<double>& inv_x = ref.inv_x;
  const std::vector<double>& inv_y = ref.inv_y;
  Image tmp(a.width, a.height, a.channels);
  Image mu_a(a.width, a.height, a.channels), e_aa = mu_a, e_ab = mu_a;
  const Image& mu_b = ref.mu;
  const Image& e_bb = ref.e_sq;
  windowed(a, inv_x, inv_y, tmp, mu_a);
  windowed(elementwise_product(a, a), inv_x, inv_y, tmp, e_aa);
  windowed(elementwise_product(a, b), inv_x, inv_y, tmp, e_ab);

  // Per-window partials with respect to the three a-dependent moments
  // (mu_a, E[a^2], E[ab]); the adjoint filters push them back to pixels.
  const double inv_n = 1.0 / static_cast<double>(mu_a.data.size());
  Image g_mu(a.width, a.height, a.channels), g_eaa = g_mu, g_eab = g_mu;
  double total = 0.0;
  for (size_t i = 0; i < mu_a.data.size(); ++i) {
    const double ma = mu_a.data[i], mb = mu_b.data[i];
    const double va = e_aa.data[i] - ma * ma;
    const double vb = e_bb.data[i] - mb * mb;
    const double cov = e_ab.data[i] - ma * mb;
    const double a1 = 2.0 * ma * mb + kC1, a2 = 2.0 * cov + kC2;
    const double b1 = ma * ma + mb * mb + kC1, b2 = va + vb + kC2;
    const double denom = b1 * b2;
    const double s = (a1 * a2) / denom;
    total += s;
    const double d_a1 = a2 / denom;
    const double d_a2 = a1 / denom;
    const double d_b1 = -s / b1;
    const double d_b2 = -s / b2;  // also d(s)/d(var_a)
    const double d_cov = 2.0 * d_a2;
    g_mu.data[i] = inv_n * (2.0 * mb * d_a1 + 2.0 * ma * d_b1 - 2.0 * ma * d_b2 -
                            mb * d_cov);
    g_eaa.data[i] = inv_n * d_b2;
    g_eab.data[i] = inv_n * d_cov;
  }

  Image adj_mu = g_mu, adj_eaa = g_mu, adj_eab = g_mu;
  windowed_adjoint(g_mu, inv_x, inv_y, tmp, adj_mu);
  windowed_adjoint(g_eaa, inv_x, inv_y, tmp, adj_eaa);
  windowed_adjoint(g_eab, inv_x, inv_y, tmp, adj_eab);

  SsimGradResult result;
  result.value = total * inv_n;
  result.d_a = Image(a.width, a.height, a.channels);
  for (size_t i = 0; i < result.d_a.data.size(); ++i) {
    result.d_a.data[i] =
        adj_mu.data[i] + 2.0 * a.data[i] * adj_eaa.data[i] + b.data[i] * adj_eab.data[i];
  }
  return result;
}

}  // namespace splatinit
