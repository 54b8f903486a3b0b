#include "spnp/kernel.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace spnp {

BlurKernel::BlurKernel(int kh_, int kw_, Eigen::MatrixXd w) : kh(kh_), kw(kw_), weights(std::move(w)) {
  if (kh <= 0 || kw <= 0 || kh % 2 == 0 || kw % 2 == 0) {
    throw ParameterError(fmt::format("kernel extents must be odd and positive, got {}x{}", kh, kw));
  }
  if (weights.rows() != kh || weights.cols() != kw) {
    throw DimensionError(fmt::format("kernel weights are {}x{}, expected {}x{}", weights.rows(),
                                     weights.cols(), kh, kw));
  }
  if (!weights.allFinite()) throw NumericError("kernel weights must be finite");
}

BlurKernel BlurKernel::normalized() const {
  const double s = sum();
  if (s == 0.0) throw NumericError("cannot normalize a kernel whose weights sum to zero");
  return BlurKernel(kh, kw, weights / s);
}

bool BlurKernel::is_symmetric(double tol) const {
  for (int a = 0; a < kh; ++a) {
    for (int b = 0; b < kw; ++b) {
      if (std::abs(weights(a, b) - weights(kh - 1 - a, kw - 1 - b)) > tol) return false;
    }
  }
  return true;
}

BlurKernel BlurKernel::delta() { return BlurKernel(1, 1, Eigen::MatrixXd::Ones(1, 1)); }

BlurKernel BlurKernel::box(int size) {
  return BlurKernel(size, size, Eigen::MatrixXd::Constant(size, size, 1.0 / (size * size)));
}

BlurKernel BlurKernel::gaussian(int size, double std) {
  if (std <= 0.0) throw ParameterError("gaussian kernel std must be positive");
  Eigen::MatrixXd w(size, size);
  const int c = size / 2;
  for (int a = 0; a < size; ++a) {
    for (int b = 0; b < size; ++b) {
      const double r2 = (a - c) * (a - c) + (b - c) * (b - c);
      w(a, b) = std::exp(-r2 / (2 * std * std));
    }
  }
  return BlurKernel(size, size, w).normalized();
}

BlurKernel BlurKernel::line(int size, double length, double angle_deg) {
  if (length <= 0.0) throw ParameterError("line kernel length must be positive");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(size, size);
  const double c = size / 2;
  const double th = angle_deg * std::numbers::pi / 180.0;
  const double dx = std::cos(th);
  const double dy = -std::sin(th);
  // Supersample along the segment and splat bilinearly.
  const int samples = 64 * size;
  for (int s = 0; s <= samples; ++s) {
    const double t = (static_cast<double>(s) / samples - 0.5) * length;
    const double y = c + t * dy;
    const double x = c + t * dx;
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0;
    const double fx = x - x0;
    for (int oy = 0; oy <= 1; ++oy) {
      for (int ox = 0; ox <= 1; ++ox) {
        const int yy = y0 + oy;
        const int xx = x0 + ox;
        if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
        w(yy, xx) += (oy ? fy : 1 - fy) * (ox ? fx : 1 - fx);
      }
    }
  }
  return BlurKernel(size, size, w).normalized();
}

BlurKernel parse_kernel_text(const std::string& text) {
  std::istringstream in(text);
  int kh = 0;
  int kw = 0;
  if (!(in >> kh >> kw)) throw IoError("kernel text: missing \"kh kw\" header");
  if (kh <= 0 || kw <= 0 || kh > 4096 || kw > 4096) {
    throw IoError(fmt::format("kernel text: bad extents {}x{}", kh, kw));
  }
  Eigen::MatrixXd w(kh, kw);
  for (int a = 0; a < kh; ++a) {
    for (int b = 0; b < kw; ++b) {
      if (!(in >> w(a, b))) {
        throw IoError(fmt::format("kernel text: expected {} weights, read {}", kh * kw, a * kw + b));
      }
    }
  }
  std::string extra;
  if (in >> extra) throw IoError("kernel text: trailing data after weights");
  return BlurKernel(kh, kw, std::move(w));
}

BlurKernel load_kernel(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open kernel file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const BlurKernel raw = parse_kernel_text(ss.str());
  const double s = raw.sum();
  if (std::abs(s - 1.0) > 1e-6) {
    spdlog::warn("kernel {} sums to {:.9g}; normalizing to 1", path.string(), s);
  }
  return raw.normalized();
}

void save_kernel(const BlurKernel& k, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write kernel file " + path.string());
  f << k.kh << ' ' << k.kw << '\n';
  for (int a = 0; a < k.kh; ++a) {
    for (int b = 0; b < k.kw; ++b) {
      f << fmt::format("{:.17g}", k.weights(a, b)) << (b + 1 < k.kw ? ' ' : '\n');
    }
  }
}

}  // namespace spnp
