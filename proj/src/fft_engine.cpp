#include "fft_engine.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace proxipm::detail {

namespace {

// FFTW's planner is not thread-safe; plan creation is serialized globally.
// Executing a plan on its own buffers is safe, so each thread keeps one
// workspace per plane size.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftWorkspace {
  int h = 0, w = 0;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  FftWorkspace(int height, int width) : h(height), w(width) {
    const std::size_t n = static_cast<std::size_t>(h) * w;
    in = fftw_alloc_complex(n);
    out = fftw_alloc_complex(n);
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward = fftw_plan_dft_2d(h, w, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_2d(h, w, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  ~FftWorkspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(in);
    fftw_free(out);
  }
};

FftWorkspace& workspace_for(int h, int w) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<FftWorkspace>>
      cache;
  auto key = std::make_pair(h, w);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftWorkspace>(h, w)).first;
  return *it->second;
}

}  // namespace

std::vector<std::complex<double>> dft2(const double* plane, int h, int w) {
  auto& ws = workspace_for(h, w);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < n; ++i) {
    ws.in[i][0] = plane[i];
    ws.in[i][1] = 0.0;
  }
  fftw_execute(ws.forward);
  std::vector<std::complex<double>> result(n);
  for (std::size_t i = 0; i < n; ++i)
    result[i] = {ws.out[i][0], ws.out[i][1]};
  return result;
}

std::vector<std::complex<double>> dft2(const std::complex<double>* plane,
                                       int h, int w) {
  auto& ws = workspace_for(h, w);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < n; ++i) {
    ws.in[i][0] = plane[i].real();
    ws.in[i][1] = plane[i].imag();
  }
  fftw_execute(ws.forward);
  std::vector<std::complex<double>> result(n);
  for (std::size_t i = 0; i < n; ++i)
    result[i] = {ws.out[i][0], ws.out[i][1]};
  return result;
}

void multiply_spectrum_inverse(const double* plane,
                               const std::complex<double>* spectrum,
                               bool conjugate_spectrum, int h, int w,
                               double* out_plane) {
  auto& ws = workspace_for(h, w);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < n; ++i) {
    ws.in[i][0] = plane[i];
    ws.in[i][1] = 0.0;
  }
  fftw_execute(ws.forward);
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = ws.out[i][0];
    const double xi = ws.out[i][1];
    double sr = spectrum[i].real();
    double si = spectrum[i].imag();
    if (conjugate_spectrum) si = -si;
    ws.in[i][0] = xr * sr - xi * si;
    ws.in[i][1] = xr * si + xi * sr;
  }
  fftw_execute(ws.backward);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out_plane[i] = ws.out[i][0] * scale;
}

}  // namespace proxipm::detail
