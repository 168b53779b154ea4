#pragma once

#include <Eigen/Core>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lfo/errors.hpp"

namespace lfo {

struct DelayComponent {
  double weight = 1.0;
  double mean = 0.0;   // s
  double sigma = 0.0;  // s; 0 makes the component a point mass
};

// Truncated Gaussian mixture over one-way latency. Sampling rejects draws
// outside [trunc_min, trunc_max], re-picking the component each attempt so
// the result follows the mixture conditioned on the window.
struct GaussianMixtureDelay {
  std::vector<DelayComponent> components;
  double trunc_min = 0.0;  // s
  double trunc_max = 0.0;  // s
  std::string channel_label = "custom";

  // Throws ConfigError on empty/negative-weight components, weights not
  // summing to 1, negative sigma, inverted truncation, a point mass outside
  // the window, or a mixture with negligible mass inside it.
  void validate() const;

  // Density of the truncated mixture; requires every sigma > 0.
  double pdf(double x) const;

  // Untruncated mixture probability of landing inside the window.
  double mass_inside() const;

  double sample(std::mt19937_64& rng) const;

  bool degenerate() const;  // all components are point masses
};

// Table-driven presets: fiber_optic, microwave, plc, telephone, satellite.
GaussianMixtureDelay channel_preset(const std::string& label);

// Two equally weighted components at lo + 0.25*span and lo + 0.75*span with
// sigma = span/8, truncated to [lo, hi].
GaussianMixtureDelay mixture_from_range(double lo, double hi,
                                        const std::string& label = "custom");

// Point mass: every sample equals `value` (0 gives an undelayed channel).
GaussianMixtureDelay constant_delay(double value);

// What the sensors report at one control instant.
struct MeasurementPayload {
  double t = 0.0;          // emission time, s
  Eigen::VectorXd omega;   // per-generator speed, pu
  Eigen::VectorXd theta;   // per-monitored-bus voltage angle, rad
};

// Holds in-flight and delivered measurements. The reader always gets the
// freshest emission that has arrived; packets overtaken by newer data are
// simply never read (out-of-order arrivals are superseded).
class MeasurementBuffer {
 public:
  explicit MeasurementBuffer(std::size_t capacity = 64);

  void clear();

  // Samples the channel for this packet's latency and stores it. Emission
  // times must be non-decreasing.
  void push(const MeasurementPayload& payload,
            const GaussianMixtureDelay& model, std::mt19937_64& rng);

  // Payload with the largest emission time among entries arrived by `now`,
  // or nothing if no packet has arrived yet.
  std::optional<MeasurementPayload> read(double now) const;

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    double arrive = 0.0;
    MeasurementPayload payload;
  };

  std::size_t cap_;
  std::deque<Entry> entries_;  // sorted by payload.t
  double last_emit_;
};

}  // namespace lfo
