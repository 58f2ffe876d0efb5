#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "chronosync/agent.hpp"
#include "chronosync/error.hpp"
#include "chronosync/random.hpp"

namespace chronosync {

struct ZeroDisturbance {};

/// d_p = sign_p * delta_p, with sign_p in [-1, 1].
struct ConstantDisturbance {
  std::vector<double> signs;
};

/// d_p = amplitude_p sin(2 pi f t + phase_p).
struct SinusoidDisturbance {
  std::vector<double> amplitude;
  double frequency = 1.0;
  std::vector<double> phase;
};

/// Uniform draw from [-delta_p, delta_p], redrawn every `hold` seconds.
struct PiecewiseRandomDisturbance {
  double hold = 0.01;
  std::uint64_t seed = 0;
};

using DisturbanceModel =
    std::variant<ZeroDisturbance, ConstantDisturbance, SinusoidDisturbance, PiecewiseRandomDisturbance>;

/// Which flow equation a disturbance realization drives.
enum class Channel : std::uint64_t { Theta = 0, Vartheta = 1, Tau = 2 };

namespace detail {

inline long hold_index(double t, double hold) { return static_cast<long>(std::floor(t / hold + 1e-9)); }

inline double sample_channel(const DisturbanceModel& model, int p, double t, double delta_p, std::uint64_t channel) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ZeroDisturbance>) {
          return 0.0;
        } else if constexpr (std::is_same_v<M, ConstantDisturbance>) {
          return m.signs.at(p) * delta_p;
        } else if constexpr (std::is_same_v<M, SinusoidDisturbance>) {
          const double shift = 2.0 * std::numbers::pi * static_cast<double>(channel) / 3.0;
          return m.amplitude.at(p) * std::sin(2.0 * std::numbers::pi * m.frequency * t + m.phase.at(p) + shift);
        } else {
          const long k = hold_index(t, m.hold);
          const double u = counter_uniform01(m.seed ^ splitmix64(channel), static_cast<std::uint64_t>(p),
                                             static_cast<std::uint64_t>(k));
          return delta_p * (2.0 * u - 1.0);
        }
      },
      model);
}

}  // namespace detail

/// d_p(t) of the shared-channel realization. Always within [-delta_p, delta_p].
inline double disturbance_sample(const DisturbanceModel& model, int p, double t, double delta_p) {
  return detail::sample_channel(model, p, t, delta_p, static_cast<std::uint64_t>(Channel::Vartheta));
}

inline void validate_disturbance(const DisturbanceModel& model, const std::vector<double>& delta) {
  const std::size_t n = delta.size();
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantDisturbance>) {
          require(m.signs.size() == n, ErrorKind::InvalidConfig, "constant disturbance needs one sign per agent");
          for (double s : m.signs)
            require(std::abs(s) <= 1.0, ErrorKind::InvalidConfig, "constant disturbance signs must lie in [-1,1]");
        } else if constexpr (std::is_same_v<M, SinusoidDisturbance>) {
          require(m.amplitude.size() == n && m.phase.size() == n, ErrorKind::InvalidConfig,
                  "sinusoid disturbance needs one amplitude and phase per agent");
          for (std::size_t p = 0; p < n; ++p) {
            require(m.amplitude[p] >= 0.0 && m.amplitude[p] <= delta[p], ErrorKind::InvalidConfig,
                    "sinusoid amplitude of agent " + std::to_string(p + 1) + " exceeds delta");
          }
          require(m.frequency >= 0.0, ErrorKind::InvalidConfig, "sinusoid frequency must be non-negative");
        } else if constexpr (std::is_same_v<M, PiecewiseRandomDisturbance>) {
          require(m.hold > 0.0, ErrorKind::InvalidConfig, "piecewise disturbance hold time must be positive");
        }
      },
      model);
}

/**
 * Disturbance realization for a whole ensemble. In shared mode one scalar per
 * agent drives the hardware clock, software clock and timer; otherwise every
 * channel gets its own realization.
 */
class DisturbanceSource {
 public:
  DisturbanceSource(DisturbanceModel model, std::vector<double> delta, bool independent)
      : model_(std::move(model)), delta_(std::move(delta)), independent_(independent) {
    validate_disturbance(model_, delta_);
  }

  AgentDisturbance agent(int p, double t) const {
    const double shared = detail::sample_channel(model_, p, t, delta_[p], static_cast<std::uint64_t>(Channel::Vartheta));
    if (!independent_) return AgentDisturbance::shared(shared);
    AgentDisturbance d;
    d.vartheta = shared;
    d.theta = detail::sample_channel(model_, p, t, delta_[p], static_cast<std::uint64_t>(Channel::Theta));
    d.tau = detail::sample_channel(model_, p, t, delta_[p], static_cast<std::uint64_t>(Channel::Tau));
    return d;
  }

  /// First time after t at which a piecewise-constant realization switches.
  double next_breakpoint(double t) const {
    if (const auto* m = std::get_if<PiecewiseRandomDisturbance>(&model_)) {
      return static_cast<double>(detail::hold_index(t, m->hold) + 1) * m->hold;
    }
    return std::numeric_limits<double>::infinity();
  }

  bool independent() const { return independent_; }
  const DisturbanceModel& model() const { return model_; }

 private:
  DisturbanceModel model_;
  std::vector<double> delta_;
  bool independent_;
};

}  // namespace chronosync
