#include "fft.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <fftw3.h>

namespace neurodrive::detail {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// fftw planning is not thread-safe; execution of an existing plan on fresh
// arrays is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t nfft) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(nfft);
    if (it != plans_.end()) return it->second;
    std::unique_ptr<double, FftwFree> in(fftw_alloc_real(nfft));
    std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(nfft / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.get(), out.get(),
                                          FFTW_ESTIMATE);
    plans_.emplace(nfft, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft) {
  const std::size_t bins = nfft / 2 + 1;
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(nfft));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(bins));
  const std::size_t n = std::min(nfft, x.size());
  std::copy_n(x.begin(), n, in.get());
  std::fill(in.get() + n, in.get() + nfft, 0.0);
  fftw_execute_dft_r2c(cache().get(nfft), in.get(), out.get());
  std::vector<std::complex<double>> result(bins);
  for (std::size_t k = 0; k < bins; ++k) result[k] = {out.get()[k][0], out.get()[k][1]};
  return result;
}

}  // namespace neurodrive::detail
