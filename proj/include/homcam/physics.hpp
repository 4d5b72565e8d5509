#pragma once

// Closed-form SPDC correlation widths and Monte-Carlo sampling of photon pairs
// from the double-Gaussian biphoton density.
//
// Internal units: µm for transverse positions, µm⁻¹ for transverse momenta,
// ns for times.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "homcam/error.hpp"
#include "homcam/rng.hpp"
#include "homcam/vec2.hpp"

namespace homcam {

struct SourceConfig {
  double crystal_length_mm{0.5};
  double pump_wavelength_nm{403.5};
  double pump_coherence_length_um{50.0};
  double pump_waist_um{75.0};
  double alpha{0.455};
  double pair_rate{1.0e5};  ///< pairs per second
  std::uint64_t seed{1};
};

struct CorrelationWidths {
  double sigma_r{0.0};  ///< µm
  double sigma_k{0.0};  ///< µm⁻¹
};

struct BiphotonSample {
  Vec2 k_signal;
  Vec2 k_idler;
  Vec2 r_signal;
  Vec2 r_idler;
  double t_emit{0.0};  ///< ns
};

inline double sigma_r_from_crystal(double crystal_length_um, double pump_wavelength_um, double alpha) {
  if (!(crystal_length_um > 0.0) || !(pump_wavelength_um > 0.0))
    throw DomainError("sigma_r_from_crystal: lengths must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw DomainError("sigma_r_from_crystal: alpha must lie in (0, 1]");
  return std::sqrt(alpha * crystal_length_um * pump_wavelength_um / (2.0 * std::numbers::pi));
}

inline double sigma_k_from_pump(double coherence_length_um, double pump_waist_um) {
  if (!(coherence_length_um > 0.0) || !(pump_waist_um > 0.0))
    throw DomainError("sigma_k_from_pump: lengths must be positive");
  return std::sqrt(1.0 / (coherence_length_um * coherence_length_um) +
                   1.0 / (4.0 * pump_waist_um * pump_waist_um));
}

/// Checked constructor for CorrelationWidths.
inline CorrelationWidths make_widths(double sigma_r_um, double sigma_k_inv_um) {
  if (!(sigma_r_um > 0.0) || !(sigma_k_inv_um > 0.0) || !std::isfinite(sigma_r_um) ||
      !std::isfinite(sigma_k_inv_um))
    throw DomainError("correlation widths must be finite and positive");
  return {sigma_r_um, sigma_k_inv_um};
}

inline CorrelationWidths widths_from_source(const SourceConfig& cfg) {
  return make_widths(sigma_r_from_crystal(cfg.crystal_length_mm * 1.0e3, cfg.pump_wavelength_nm * 1.0e-3, cfg.alpha),
                     sigma_k_from_pump(cfg.pump_coherence_length_um, cfg.pump_waist_um));
}

/// K = ¼ (1/(σ_r σ_k) + σ_r σ_k)²; K ≥ 1 with equality at σ_r σ_k = 1.
inline double schmidt_number(const CorrelationWidths& w) {
  if (!(w.sigma_r > 0.0) || !(w.sigma_k > 0.0))
    throw DomainError("schmidt_number: widths must be positive");
  const double p = w.sigma_r * w.sigma_k;
  const double s = 1.0 / p + p;
  return 0.25 * s * s;
}

/// Throws ConfigError on invalid fields; returns non-fatal warnings.
inline std::vector<std::string> validate(const SourceConfig& cfg) {
  if (!(cfg.crystal_length_mm > 0.0)) throw ConfigError("source.crystal_length_mm must be > 0");
  if (!(cfg.pump_wavelength_nm > 0.0)) throw ConfigError("source.pump_wavelength_nm must be > 0");
  if (!(cfg.pump_coherence_length_um > 0.0)) throw ConfigError("source.pump_coherence_length_um must be > 0");
  if (!(cfg.pump_waist_um > 0.0)) throw ConfigError("source.pump_waist_um must be > 0");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("source.alpha must lie in (0, 1]");
  if (!(cfg.pair_rate > 0.0)) throw ConfigError("source.pair_rate must be > 0");

  std::vector<std::string> warnings;
  const auto w = widths_from_source(cfg);
  if (w.sigma_r * w.sigma_k > 1.0)
    warnings.push_back("sigma_r * sigma_k > 1: weaker than minimum-uncertainty correlations, unphysical for this source model");
  return warnings;
}

/// Draws one pair from |Ψ|². Sum/difference coordinates are independent
/// Gaussians: per component, std(k_s + k_i) = σ_k, std(k_s − k_i) = 1/σ_r,
/// std(r_s − r_i) = σ_r, std(r_s + r_i) = 1/σ_k. Momenta and positions are
/// drawn independently. `prev_time_ns` is advanced by an exponential waiting
/// time with mean 1/pair_rate.
inline BiphotonSample sample_pair(const SourceConfig& cfg, const CorrelationWidths& w, Rng& rng,
                                  double prev_time_ns = 0.0) {
  BiphotonSample s;
  const Vec2 k_sum{w.sigma_k * standard_normal(rng), w.sigma_k * standard_normal(rng)};
  const Vec2 k_diff{standard_normal(rng) / w.sigma_r, standard_normal(rng) / w.sigma_r};
  const Vec2 r_diff{w.sigma_r * standard_normal(rng), w.sigma_r * standard_normal(rng)};
  const Vec2 r_sum{standard_normal(rng) / w.sigma_k, standard_normal(rng) / w.sigma_k};
  s.k_signal = 0.5 * (k_sum + k_diff);
  s.k_idler = 0.5 * (k_sum - k_diff);
  s.r_signal = 0.5 * (r_sum + r_diff);
  s.r_idler = 0.5 * (r_sum - r_diff);
  const double mean_wait_ns = 1.0e9 / cfg.pair_rate;
  s.t_emit = prev_time_ns + std::exponential_distribution<double>{1.0 / mean_wait_ns}(rng);
  return s;
}

/// Stateful wrapper owning the emission clock of one pair stream.
class PairSource {
public:
  PairSource(const SourceConfig& cfg, const CorrelationWidths& w, double start_time_ns = 0.0)
      : cfg_(cfg), widths_(w), clock_ns_(start_time_ns) {}

  BiphotonSample next(Rng& rng) {
    auto s = sample_pair(cfg_, widths_, rng, clock_ns_);
    clock_ns_ = s.t_emit;
    return s;
  }

  double clock_ns() const noexcept { return clock_ns_; }

private:
  SourceConfig cfg_;
  CorrelationWidths widths_;
  double clock_ns_;
};

} // namespace homcam
