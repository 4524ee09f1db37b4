#include "qhrisk/processes.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>

#include "json.hpp"
#include "qhrisk/errors.hpp"
#include "qhrisk/numerics.hpp"

namespace qhrisk {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Full linear convolution of x and a via real FFTs; out[k] = sum_j a_j x_{k-j}.
std::vector<double> convolve(const std::vector<double>& x,
                             const std::vector<double>& a) {
  const std::size_t len = x.size() + a.size() - 1;
  const std::size_t N = next_pow2(len);
  const std::size_t H = N / 2 + 1;
  double* bx = fftw_alloc_real(N);
  double* ba = fftw_alloc_real(N);
  fftw_complex* cx = fftw_alloc_complex(H);
  fftw_complex* ca = fftw_alloc_complex(H);
  fftw_plan px, pa, pinv;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    px = fftw_plan_dft_r2c_1d(static_cast<int>(N), bx, cx, FFTW_ESTIMATE);
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(N), ba, ca, FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(N), cx, bx, FFTW_ESTIMATE);
  }
  std::fill(bx, bx + N, 0.0);
  std::fill(ba, ba + N, 0.0);
  std::copy(x.begin(), x.end(), bx);
  std::copy(a.begin(), a.end(), ba);
  fftw_execute(px);
  fftw_execute(pa);
  for (std::size_t k = 0; k < H; ++k) {
    const double re = cx[k][0] * ca[k][0] - cx[k][1] * ca[k][1];
    const double im = cx[k][0] * ca[k][1] + cx[k][1] * ca[k][0];
    cx[k][0] = re;
    cx[k][1] = im;
  }
  fftw_execute(pinv);
  std::vector<double> out(len);
  for (std::size_t k = 0; k < len; ++k) out[k] = bx[k] / static_cast<double>(N);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(px);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pinv);
  }
  fftw_free(bx);
  fftw_free(ba);
  fftw_free(cx);
  fftw_free(ca);
  return out;
}

double draw_innovation(const std::optional<Dist>& d, Rng& rng,
                       std::normal_distribution<double>& normal) {
  return d ? d->sample(rng) : normal(rng);
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::iid: return "iid";
    case Regime::ar1: return "ar1";
    case Regime::garch11: return "garch11";
    case Regime::long_memory: return "long_memory";
  }
  return "unknown";
}

Regime regime_from_string(const std::string& s) {
  if (s == "iid") return Regime::iid;
  if (s == "ar1") return Regime::ar1;
  if (s == "garch11") return Regime::garch11;
  if (s == "long_memory") return Regime::long_memory;
  throw DomainError("unknown regime '" + s + "'");
}

void ProcessSpec::validate() const {
  if (n == 0) throw DomainError("process: n must be >= 1");
  switch (regime) {
    case Regime::iid:
      if (!innovation) throw DomainError("process: iid regime needs a law");
      break;
    case Regime::ar1:
      if (!(std::abs(ar_coef) < 1.0)) throw DomainError("ar1: need |coef| < 1");
      break;
    case Regime::garch11:
      if (!(garch_omega > 0.0)) throw DomainError("garch11: need omega > 0");
      if (!(garch_a >= 0.0 && garch_b >= 0.0)) {
        throw DomainError("garch11: need a, b >= 0");
      }
      if (!(garch_a + garch_b < 1.0)) throw DomainError("garch11: need a + b < 1");
      break;
    case Regime::long_memory:
      if (!(lm_beta > 0.5 && lm_beta < 1.0)) {
        throw DomainError("long_memory: beta must lie in (1/2,1)");
      }
      if (lm_truncation < 1) throw DomainError("long_memory: truncation M must be >= 1");
      break;
  }
}

std::string ProcessSpec::to_json() const {
  nlohmann::json j;
  j["regime"] = to_string(regime);
  j["innovation"] = innovation ? innovation->describe() : "normal(0,1)";
  j["n"] = n;
  j["seed"] = seed;
  switch (regime) {
    case Regime::iid: break;
    case Regime::ar1: j["coef"] = ar_coef; break;
    case Regime::garch11:
      j["omega"] = garch_omega;
      j["a"] = garch_a;
      j["b"] = garch_b;
      break;
    case Regime::long_memory:
      j["beta"] = lm_beta;
      j["truncation"] = lm_truncation;
      break;
  }
  return j.dump();
}

std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> sample_process(const ProcessSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(spec.n);
  switch (spec.regime) {
    case Regime::iid:
      for (auto& x : out) x = spec.innovation->sample(rng);
      break;
    case Regime::ar1: {
      double x = 0.0;
      for (std::size_t t = 0; t < kBurnIn + spec.n; ++t) {
        x = spec.ar_coef * x + draw_innovation(spec.innovation, rng, normal);
        if (t >= kBurnIn) out[t - kBurnIn] = x;
      }
      break;
    }
    case Regime::garch11: {
      double s2 = spec.garch_omega / (1.0 - spec.garch_a - spec.garch_b);
      double x = 0.0;
      for (std::size_t t = 0; t < kBurnIn + spec.n; ++t) {
        s2 = spec.garch_omega + spec.garch_a * x * x + spec.garch_b * s2;
        x = std::sqrt(s2) * draw_innovation(spec.innovation, rng, normal);
        if (t >= kBurnIn) out[t - kBurnIn] = x;
      }
      break;
    }
    case Regime::long_memory: {
      const std::size_t M = spec.lm_truncation;
      std::vector<double> eps(spec.n + M);
      for (auto& e : eps) e = draw_innovation(spec.innovation, rng, normal);
      std::vector<double> a(M + 1);
      a[0] = 1.0;
      for (std::size_t s = 1; s <= M; ++s) {
        a[s] = std::pow(static_cast<double>(s), -spec.lm_beta);
      }
      const auto conv = convolve(eps, a);
      // X_t for t >= M sees a full window of M past innovations
      for (std::size_t t = 0; t < spec.n; ++t) out[t] = conv[t + M];
      break;
    }
  }
  return out;
}

void export_path_csv(const std::string& path, const ProcessSpec& spec,
                     std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# " << spec.to_json() << "\n";
  out.precision(17);
  for (double v : values) out << v << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

double lm_integral(double beta) {
  if (!(beta > 0.5 && beta < 1.0)) {
    throw DomainError("c1_beta: beta must lie in (1/2,1)");
  }
  numerics::QuadOptions opt{1e-14, 1e-15, 15};
  // [0,1] directly; [1,inf) through x = 1/y
  const auto near = numerics::integrate(
      [&](double x) { return std::pow(x * (1.0 + x), -beta); }, 0.0, 1.0, opt);
  const auto far = numerics::integrate(
      [&](double y) {
        return std::pow(y, 2.0 * beta - 2.0) * std::pow(1.0 + y, -beta);
      },
      0.0, 1.0, opt);
  return numerics::require_converged(near, "lm_integral") +
         numerics::require_converged(far, "lm_integral");
}

double c1_beta(double beta, double var_eps) {
  if (!(var_eps > 0.0)) throw DomainError("c1_beta: variance must be > 0");
  const double I = lm_integral(beta);
  return std::sqrt(var_eps * (1.0 - (beta - 0.5)) * (1.0 - (2.0 * beta - 1.0)) /
                   I);
}

double lm_long_run_variance(double beta, double var_eps) {
  if (!(var_eps > 0.0)) throw DomainError("long-run variance: variance must be > 0");
  return var_eps * lm_integral(beta) / ((1.0 - beta) * (3.0 - 2.0 * beta));
}

double lm_marginal_variance(double beta, std::size_t truncation) {
  double s = 1.0;
  for (std::size_t k = 1; k <= truncation; ++k) {
    s += std::pow(static_cast<double>(k), -2.0 * beta);
  }
  return s;
}

std::vector<double> sample_standard_bridge(std::span<const double> u, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(u.size());
  double prev_u = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < prev_u || u[i] > 1.0) {
      throw DomainError("bridge: levels must be ascending in [0,1]");
    }
    acc += std::sqrt(u[i] - prev_u) * normal(rng);
    w[i] = acc;
    prev_u = u[i];
  }
  const double w1 = acc + std::sqrt(1.0 - prev_u) * normal(rng);
  for (std::size_t i = 0; i < u.size(); ++i) {
    // exact zeros at the tied-down ends
    if (u[i] == 0.0 || u[i] == 1.0) {
      w[i] = 0.0;
    } else {
      w[i] -= u[i] * w1;
    }
  }
  return w;
}

std::vector<double> sample_bridge(const BridgeSpec& spec) {
  const double lo = spec.F0.lower();
  const double hi = spec.F0.upper();
  std::vector<double> u(spec.grid.size());
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double x = spec.grid[i];
    if (i > 0 && !(x > spec.grid[i - 1])) {
      throw DomainError("bridge: grid must be strictly increasing");
    }
    if (x < lo || x > hi) {
      throw DomainError("bridge: grid point outside the support of F0");
    }
    u[i] = spec.F0.cdf(x);
  }
  Rng rng(spec.seed);
  return sample_standard_bridge(u, rng);
}

DegenerateLimit::DegenerateLimit(const Dist& F0, double beta, double var_eps,
                                 std::vector<double> grid)
    : grid_(std::move(grid)), c1_(c1_beta(beta, var_eps)) {
  if (!F0.has_density()) {
    throw DomainError("degenerate_limit: F0 must have a density");
  }
  shape_.reserve(grid_.size());
  for (double x : grid_) shape_.push_back(*F0.density(x));
}

std::vector<double> DegenerateLimit::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = c1_ * normal(rng);
  std::vector<double> out(shape_.size());
  for (std::size_t i = 0; i < shape_.size(); ++i) out[i] = z * shape_[i];
  return out;
}

DegenerateLimit degenerate_limit(const Dist& F0, double beta, double var_eps,
                                 std::vector<double> grid) {
  return DegenerateLimit(F0, beta, var_eps, std::move(grid));
}

}  // namespace qhrisk
