#include "fft2d.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace spnp::detail {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// fftw_plan_* is not thread-safe; fftw_execute_dft on an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(int height, int width) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto [it, inserted] = cache.try_emplace({height, width});
  if (inserted) {
    std::vector<Complex> scratch(static_cast<std::size_t>(height) * width);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    it->second.forward = fftw_plan_dft_2d(height, width, p, p, FFTW_FORWARD, flags);
    it->second.backward = fftw_plan_dft_2d(height, width, p, p, FFTW_BACKWARD, flags);
  }
  return it->second;
}

}  // namespace

void fft2d(std::vector<Complex>& data, int height, int width) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(height, width).forward, p, p);
}

void ifft2d(std::vector<Complex>& data, int height, int width) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(height, width).backward, p, p);
  const double scale = 1.0 / (static_cast<double>(height) * width);
  for (auto& v : data) v *= scale;
}

}  // namespace spnp::detail
