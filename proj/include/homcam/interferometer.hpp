#pragma once

// Two-arm interferometer: coordinate inversion on one arm, path delay,
// residual misalignment, and beamsplitter port/spot routing.

#include <cmath>
#include <cstdint>

#include "homcam/error.hpp"
#include "homcam/physics.hpp"
#include "homcam/rng.hpp"
#include "homcam/vec2.hpp"

namespace homcam {

/// Output spot on the sensor. Spots 1 and 2 are port a, spots 3 and 4 port b.
using SpotId = std::uint8_t;

constexpr bool valid_spot(int s) noexcept { return s >= 1 && s <= 4; }
constexpr char port_of(SpotId s) noexcept { return s <= 2 ? 'a' : 'b'; }

enum class ImagingPlane { near_field, far_field };

/// Misalignment lengths (`displacement`, `spatial_mismatch_sigma`) are in the
/// units of the imaged coordinate: µm in the near field, µm⁻¹ in the far field.
struct InterferometerConfig {
  double delay_um{0.0};               ///< Δl, signed
  double temporal_width_um{20.0};     ///< σ_l of the Gaussian HOM envelope
  double rotation_rad{0.0};           ///< residual relative image rotation
  Vec2 displacement{};                ///< residual transverse offset
  double spatial_mismatch_sigma{2.0}; ///< mismatch at which the overlap drops to e^{-1/2}
};

struct RoutedPair {
  SpotId spot_signal{1};
  SpotId spot_idler{1};
  bool bunched{false};
};

inline void validate(const InterferometerConfig& cfg) {
  if (!(cfg.temporal_width_um > 0.0)) throw ConfigError("interferometer.temporal_width_um must be > 0");
  if (!(cfg.spatial_mismatch_sigma > 0.0)) throw ConfigError("interferometer.spatial_mismatch_sigma must be > 0");
  if (!std::isfinite(cfg.delay_um) || !std::isfinite(cfg.rotation_rad))
    throw ConfigError("interferometer delay and rotation must be finite");
}

/// Dove prism (q_y → −q_y) composed with the extra reflection (q_x → −q_x).
constexpr Vec2 arm_transform(const Vec2& q) noexcept { return {-q.x, -q.y}; }

/// Spatial overlap of the two arms at imaged signal coordinate q. The idler
/// partner sits at −q; after the arm inversion and the residual rotation it
/// lands at R_θ(q) + δ, so the mismatch is R_θ(q) − q + δ.
inline double spatial_overlap(const Vec2& q, const InterferometerConfig& cfg) noexcept {
  const Vec2 idler_image = rotate(arm_transform(-q), cfg.rotation_rad) + cfg.displacement;
  const Vec2 mismatch = idler_image - q;
  const double w = cfg.spatial_mismatch_sigma;
  return std::exp(-norm2(mismatch) / (2.0 * w * w));
}

inline double temporal_overlap(const InterferometerConfig& cfg) noexcept {
  const double u = cfg.delay_um / cfg.temporal_width_um;
  return std::exp(-0.5 * u * u);
}

/// I ∈ [0,1]; I = 1 iff Δl = 0, θ = 0 and δ = 0.
inline double indistinguishability(const Vec2& imaged_signal_coord, const InterferometerConfig& cfg) noexcept {
  return temporal_overlap(cfg) * spatial_overlap(imaged_signal_coord, cfg);
}

inline double indistinguishability(const BiphotonSample& pair, const InterferometerConfig& cfg,
                                   ImagingPlane plane) noexcept {
  return indistinguishability(plane == ImagingPlane::near_field ? pair.r_signal : pair.k_signal, cfg);
}

/// Bunching probability (1+I)/2, then a uniform port and uniform spots.
inline RoutedPair route_pair(double indist, Rng& rng) {
  if (!(indist >= 0.0 && indist <= 1.0)) throw DomainError("route_pair: indistinguishability outside [0, 1]");
  const double p_same = 0.5 * (1.0 + indist);
  RoutedPair out;
  out.bunched = uniform01(rng) < p_same;
  const bool signal_in_a = uniform01(rng) < 0.5;
  const bool idler_in_a = out.bunched ? signal_in_a : !signal_in_a;
  const auto pick = [&rng](bool in_a) -> SpotId {
    const SpotId first = in_a ? 1 : 3;
    return static_cast<SpotId>(first + (uniform01(rng) < 0.5 ? 0 : 1));
  };
  out.spot_signal = pick(signal_in_a);
  out.spot_idler = pick(idler_in_a);
  return out;
}

/// Mean spatial overlap over a centred disk of `radius` for an isotropic
/// Gaussian beam with per-axis std `beam_sigma` (zero displacement):
///   ⟨S⟩ = (1 − e^{−uR²/2}) / (u s² (1 − e^{−R²/2s²})),  u = 1/s² + 4 sin²(θ/2)/w².
/// All lengths in imaged-coordinate units.
inline double mean_overlap_in_disk(double beam_sigma, double radius, double rotation_rad,
                                   double mismatch_sigma) {
  if (!(beam_sigma > 0.0) || !(radius > 0.0) || !(mismatch_sigma > 0.0))
    throw DomainError("mean_overlap_in_disk: widths must be positive");
  const double chord = 2.0 * std::sin(0.5 * rotation_rad);
  const double beta = chord * chord / (mismatch_sigma * mismatch_sigma);
  const double s2 = beam_sigma * beam_sigma;
  const double u = 1.0 / s2 + beta;
  const double r2 = radius * radius;
  return -std::expm1(-0.5 * u * r2) / (u * s2 * -std::expm1(-0.5 * r2 / s2));
}

} // namespace homcam
