// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "ttsa/autograd.hpp"
#include "ttsa/error.hpp"

namespace ttsa::ag {
namespace {

// FFTW planning is not thread-safe; execution on plans created with
// FFTW_UNALIGNED is, and the chosen algorithm does not depend on buffer
// alignment, which keeps results bit-reproducible.
struct Plans {
  fftw_plan forward;
  fftw_plan inverse;
};

const Plans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(static_cast<std::size_t>(n));
  std::vector<fftw_complex> cplx(static_cast<std::size_t>(n / 2 + 1));
  Plans p{};
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, p).first->second;
}

}  // namespace

Var rfft_magnitude(const Var& frames, double power_floor) {
  const Tensor& fv = frames.value();
  require(fv.rank() == 2 && fv.dim(0) >= 2, "shape-mismatch", "rfft_magnitude needs [N, F], got " + shape_str(fv.shape()));
  const int n = fv.dim(0), f = fv.dim(1), bins = n / 2 + 1;
  const Plans& plans = plans_for(n);
  Tensor mag({bins, f});
  Tensor re({bins, f});
  Tensor im({bins, f});
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::vector<fftw_complex> spec(static_cast<std::size_t>(bins));
  for (int j = 0; j < f; ++j) {
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = fv.at(i, j);
    fftw_execute_dft_r2c(plans.forward, buf.data(), spec.data());
    for (int b = 0; b < bins; ++b) {
      const double r = spec[static_cast<std::size_t>(b)][0];
      const double m = spec[static_cast<std::size_t>(b)][1];
      re.at(b, j) = r;
      im.at(b, j) = m;
      mag.at(b, j) = std::sqrt(std::max(r * r + m * m, power_floor));
    }
  }
  return make_op(std::move(mag), {frames}, [n, f, bins, power_floor, re = std::move(re), im = std::move(im)](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const Plans& plans = plans_for(n);
    std::vector<fftw_complex> spec(static_cast<std::size_t>(bins));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int j = 0; j < f; ++j) {
      // dL/dx[t] = Re(sum_b (gre_b + i gim_b) e^{+2 pi i b t / N}) over b <= N/2.
      // c2r implicitly adds conjugate mirrors, so interior bins are halved.
      for (int b = 0; b < bins; ++b) {
        const double r = re.at(b, j), m = im.at(b, j);
        const double p = r * r + m * m;
        double gre = 0.0, gim = 0.0;
        if (p >= power_floor) {
          const double s = self.grad.at(b, j) / self.value.at(b, j);
          gre = s * r;
          gim = s * m;
        }
        const bool edge = b == 0 || (n % 2 == 0 && b == n / 2);
        const double w = edge ? 1.0 : 0.5;
        spec[static_cast<std::size_t>(b)][0] = w * gre;
        spec[static_cast<std::size_t>(b)][1] = edge ? 0.0 : w * gim;
      }
      fftw_execute_dft_c2r(plans.inverse, spec.data(), out.data());
      for (int i = 0; i < n; ++i) g.at(i, j) += out[static_cast<std::size_t>(i)];
    }
  });
}

}  // namespace ttsa::ag
