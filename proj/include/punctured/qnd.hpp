#pragma once

// Vacuum removal by a cascade of QND parity-type measurements: desired and
// realized states, fidelity, a reproducible Monte Carlo of the cascade,
// vacuum-or-not post-selection and pure-state decomposition for synthesis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "punctured/error.hpp"
#include "punctured/fock.hpp"

namespace punctured {

// ---------------------------------------------------------------------------
// Random numbers: xoshiro256** seeded through splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Xoshiro256ss {
 public:
  static constexpr const char* kName = "xoshiro256** (splitmix64 per-shard seeding)";

  /// State for shard `stream` of master seed `seed`.
  Xoshiro256ss(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1].
  double uniform_open0() { return (double((next() >> 11) + 1)) * 0x1.0p-53; }
  /// Uniform on [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// States

struct QndConfig {
  double nbar = 1.0;
  int l_max = 1;
  int n_max = 32;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint64_t shard_size = 65536;
};

inline void validate(const QndConfig& c) {
  if (!(c.nbar > 0.0) || !std::isfinite(c.nbar)) throw InvalidInput("QND requires finite nbar > 0");
  if (c.l_max < 1 || c.l_max > 30) throw InvalidInput("l_max must be in 1..30");
  require_n_max(c.n_max);
  if ((std::int64_t{1} << c.l_max) > c.n_max) {
    throw InvalidInput("resolution constraint violated: 2^l_max = " +
                       std::to_string(std::int64_t{1} << c.l_max) + " exceeds n_max = " +
                       std::to_string(c.n_max));
  }
  if (c.threads < 1) throw InvalidInput("threads must be >= 1");
  if (c.shard_size < 1) throw InvalidInput("shard_size must be >= 1");
}

/// Thermal mass on Fock indices that are multiples of 2^l_max:
/// sum_k p_T(K k) = 1/((nbar+1)(1 - x^K)), x = nbar/(nbar+1).
inline double discarded_mass(double nbar, int l_max) {
  const double k = std::ldexp(1.0, l_max);
  // 1 - x^K = -expm1(K log x), log x = -log1p(1/nbar)
  return 1.0 / ((nbar + 1.0) * -std::expm1(-k * std::log1p(1.0 / nbar)));
}

inline double acceptance_probability(double nbar, int l_max) { return 1.0 - discarded_mass(nbar, l_max); }

/// ((nbar+1)/nbar) [rho_T - |0><0|/(nbar+1)] on the truncated basis.
inline FockOperator vacuum_removed_state(double nbar, int n_max) {
  if (!(nbar > 0.0) || !std::isfinite(nbar)) throw InvalidInput("vacuum-removed state requires nbar > 0");
  require_n_max(n_max);
  auto p = thermal_populations(nbar, n_max + 1);
  const double norm = (nbar + 1.0) / nbar;
  p[0] = 0.0;
  for (std::size_t n = 1; n < p.size(); ++n) p[n] *= norm;
  return FockOperator::diagonal(p);
}

/// Thermal state with every Fock index divisible by 2^l_max removed,
/// normalized by the exact (untruncated) kept mass.
inline FockOperator realized_state(double nbar, int l_max, int n_max) {
  validate(QndConfig{nbar, l_max, n_max});
  auto p = thermal_populations(nbar, n_max + 1);
  const std::size_t k = std::size_t{1} << l_max;
  const double norm = 1.0 / acceptance_probability(nbar, l_max);
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = (n % k == 0) ? 0.0 : p[n] * norm;
  return FockOperator::diagonal(p);
}

/// F = 1 - (1/nbar) / (((nbar+1)/nbar)^(2^l_max) - 1), squared convention.
inline double fidelity_closed_form(double nbar, int l_max) {
  if (!(nbar > 0.0)) throw InvalidInput("fidelity requires nbar > 0");
  if (l_max < 1) throw InvalidInput("fidelity requires l_max >= 1");
  const double k = std::ldexp(1.0, l_max);
  return 1.0 - 1.0 / (nbar * std::expm1(k * std::log1p(1.0 / nbar)));
}

/// Cut-off at which the thermal tail beyond it is below `tail`.
inline int tail_cutoff(double nbar, double tail = 1e-16) {
  const double log_x = -std::log1p(1.0 / nbar);
  return std::max(8, static_cast<int>(std::ceil(std::log(tail) / log_x)) + 1);
}

/// diagonal_fidelity of desired vs realized on a basis whose neglected tail
/// is below roundoff.
inline double fidelity_direct(double nbar, int l_max) {
  const int n = std::max(tail_cutoff(nbar), (1 << l_max) + 1);
  return diagonal_fidelity(vacuum_removed_state(nbar, n), realized_state(nbar, l_max, n));
}

// ---------------------------------------------------------------------------
// Cascade

struct CascadeOutcome {
  bool accepted;
  int stage;      // stage at which '-' was seen (1-based), or l_max+1 if discarded
  int anomalies;  // stages with phase outside {0, pi}
};

/// Probability of '+' at stage l for photon number n: cos^2(phi/2) with
/// phi = pi (n mod 2q)/q, q = 2^{l-1}; exact at phi in {0, pi}.
inline double plus_probability(std::uint64_t n, int l, bool* anomaly = nullptr) {
  const std::uint64_t q = std::uint64_t{1} << (l - 1);
  const std::uint64_t m = n % (2 * q);
  if (anomaly) *anomaly = !(m == 0 || m == q);
  if (m == 0) return 1.0;
  if (m == q) return 0.0;
  const double phi = kPi * double(m) / double(q);
  return 0.5 * (1.0 + std::cos(phi));
}

/// One shot of the cascade for photon number n; the first '-' accepts.
template <class Rng>
CascadeOutcome run_cascade(std::uint64_t n, int l_max, Rng& rng) {
  CascadeOutcome out{false, l_max + 1, 0};
  for (int l = 1; l <= l_max; ++l) {
    bool anomaly = false;
    const double p_plus = plus_probability(n, l, &anomaly);
    out.anomalies += anomaly ? 1 : 0;
    if (!(rng.uniform() < p_plus)) {
      out.accepted = true;
      out.stage = l;
      return out;
    }
  }
  return out;
}

/// Exact thermal sample by inverse CDF of the geometric distribution.
template <class Rng>
std::uint64_t sample_thermal(double nbar, Rng& rng) {
  const double log_x = -std::log1p(1.0 / nbar);
  const double v = std::floor(std::log(rng.uniform_open0()) / log_x);
  if (!(v < 9.0e18)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(v);
}

struct QndResult {
  QndConfig config;
  FockOperator realized;
  FockOperator desired;
  double fidelity_closed = 0.0;
  double fidelity_direct = 0.0;
  double acceptance_exact = 0.0;
  std::optional<double> acceptance_empirical;
  std::vector<std::uint64_t> histogram;  // accepted counts for n = 0..n_max, then overflow
  std::uint64_t accepted = 0;
  std::uint64_t anomalies = 0;
  std::string rng = Xoshiro256ss::kName;
};

namespace detail {

struct ShardTally {
  std::vector<std::uint64_t> histogram;
  std::uint64_t accepted = 0;
  std::uint64_t anomalies = 0;
};

inline ShardTally run_shard(const QndConfig& c, std::uint64_t shard, std::uint64_t count) {
  ShardTally t;
  t.histogram.assign(static_cast<std::size_t>(c.n_max) + 2, 0);
  Xoshiro256ss rng(c.seed, shard);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t n = sample_thermal(c.nbar, rng);
    const CascadeOutcome o = run_cascade(n, c.l_max, rng);
    t.anomalies += static_cast<std::uint64_t>(o.anomalies);
    if (!o.accepted) continue;
    ++t.accepted;
    const std::size_t bin = n <= std::uint64_t(c.n_max) ? std::size_t(n) : std::size_t(c.n_max) + 1;
    ++t.histogram[bin];
  }
  return t;
}

}  // namespace detail

/// Exact results plus, for shots > 0, a Monte Carlo of the cascade. Shots are
/// split into fixed-size shards, each with its own generator state derived
/// from (seed, shard index), so results do not depend on `threads`.
inline QndResult simulate_qnd(const QndConfig& c) {
  validate(c);
  QndResult r{c,
              realized_state(c.nbar, c.l_max, c.n_max),
              vacuum_removed_state(c.nbar, c.n_max),
              fidelity_closed_form(c.nbar, c.l_max),
              fidelity_direct(c.nbar, c.l_max),
              acceptance_probability(c.nbar, c.l_max),
              std::nullopt,
              std::vector<std::uint64_t>(static_cast<std::size_t>(c.n_max) + 2, 0)};
  if (c.shots == 0) return r;

  const std::uint64_t shards = (c.shots + c.shard_size - 1) / c.shard_size;
  std::vector<detail::ShardTally> tallies(static_cast<std::size_t>(shards));
  auto work = [&](unsigned worker) {
    for (std::uint64_t s = worker; s < shards; s += static_cast<unsigned>(c.threads)) {
      const std::uint64_t count = std::min(c.shard_size, c.shots - s * c.shard_size);
      tallies[static_cast<std::size_t>(s)] = detail::run_shard(c, s, count);
    }
  };
  if (c.threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < c.threads; ++t) pool.emplace_back(work, static_cast<unsigned>(t));
    for (auto& th : pool) th.join();
  }
  for (const auto& t : tallies) {
    r.accepted += t.accepted;
    r.anomalies += t.anomalies;
    for (std::size_t k = 0; k < r.histogram.size(); ++k) r.histogram[k] += t.histogram[k];
  }
  r.acceptance_empirical = double(r.accepted) / double(c.shots);
  return r;
}

// ---------------------------------------------------------------------------
// Vacuum-or-not post-selection and decomposition

/// Removes the vacuum population and renormalizes by 1 - rho_00. Requires
/// vanishing vacuum coherences.
inline FockOperator vacuum_or_not_postselect(const FockOperator& rho) {
  detail::require_hermitian(rho);
  const CMatrix& m = rho.entries();
  const double scale = rho.max_abs();
  for (int n = 1; n < rho.dim(); ++n) {
    if (std::abs(m(0, n)) > 1e-10 * scale) {
      throw InvalidInput("vacuum coherence rho_0" + std::to_string(n) +
                         " is nonzero; vacuum-or-not post-selection needs rho_0n = 0");
    }
  }
  const double p0 = m(0, 0).real();
  const double keep = rho.trace() - p0;
  if (!(keep > 1e-300) || std::abs(1.0 - p0) < 1e-15) {
    throw InvalidInput("post-selection leaves nothing: rho_00 = 1");
  }
  CMatrix out = m;
  out.row(0).setZero();
  out.col(0).setZero();
  out /= (1.0 - p0);
  return FockOperator(std::move(out), true);
}

struct SynthesisComponent {
  double probability;
  FockVector state;
};

struct Decomposition {
  std::vector<SynthesisComponent> components;
  double reconstruction_fidelity;  // (sum_i sqrt(lambda_i p_i))^2
  double discarded_weight;
};

/// Eigenvectors of rho with eigenvalue >= weight_floor, probabilities renormalized.
inline Decomposition decompose_for_synthesis(const FockOperator& rho, double weight_floor) {
  if (!(weight_floor >= 0.0)) throw InvalidInput("weight floor must be >= 0");
  if (std::abs(rho.trace() - 1.0) > 1e-6) throw InvalidInput("decomposition requires unit trace");
  const auto pairs = eigendecompose(rho);
  if (pairs.back().value < -1e-10 * rho.trace()) {
    throw InvalidInput("decomposition requires a positive semidefinite operator (min eigenvalue " +
                       std::to_string(pairs.back().value) + ")");
  }
  Decomposition d{{}, 0.0, 0.0};
  double kept = 0.0;
  for (const auto& p : pairs) {
    if (p.value >= weight_floor && p.value > 0.0) {
      d.components.push_back({p.value, p.vector});
      kept += p.value;
    } else {
      d.discarded_weight += std::max(p.value, 0.0);
    }
  }
  if (d.components.empty()) throw InvalidInput("weight floor removes every component");
  double root = 0.0;
  for (auto& c : d.components) {
    const double lambda = c.probability;
    c.probability /= kept;
    root += std::sqrt(lambda * c.probability);
  }
  d.reconstruction_fidelity = root * root;
  return d;
}

}  // namespace punctured
