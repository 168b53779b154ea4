#include "lfo/delay_channel.hpp"

#include <cmath>
#include <limits>

namespace lfo {

namespace {

double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * (1.0 + std::erf((x - mean) / (sigma * std::sqrt(2.0))));
}

double normal_pdf(double x, double mean, double sigma) {
  double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace

void GaussianMixtureDelay::validate() const {
  if (components.empty()) throw ConfigError("delay mixture has no components");
  double wsum = 0;
  for (const DelayComponent& c : components) {
    if (c.weight <= 0) throw ConfigError("delay component weight must be > 0");
    if (c.sigma < 0) throw ConfigError("delay component sigma must be >= 0");
    if (c.mean < 0) throw ConfigError("delay component mean must be >= 0");
    if (c.sigma == 0 && (c.mean < trunc_min || c.mean > trunc_max))
      throw ConfigError("constant delay component lies outside the truncation window");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw ConfigError("delay component weights must sum to 1");
  if (trunc_min < 0) throw ConfigError("delay truncation must be non-negative");
  if (trunc_min > trunc_max)
    throw ConfigError("delay truncation window is inverted");
  if (trunc_min == trunc_max && !degenerate())
    throw ConfigError("zero-width truncation window needs point-mass components");
  if (mass_inside() < 1e-3)
    throw ConfigError("delay mixture has negligible mass inside the truncation window");
}

bool GaussianMixtureDelay::degenerate() const {
  for (const DelayComponent& c : components)
    if (c.sigma > 0) return false;
  return true;
}

double GaussianMixtureDelay::mass_inside() const {
  double m = 0;
  for (const DelayComponent& c : components) {
    if (c.sigma == 0)
      m += (c.mean >= trunc_min && c.mean <= trunc_max) ? c.weight : 0.0;
    else
      m += c.weight * (normal_cdf(trunc_max, c.mean, c.sigma) -
                       normal_cdf(trunc_min, c.mean, c.sigma));
  }
  return m;
}

double GaussianMixtureDelay::pdf(double x) const {
  if (x < trunc_min || x > trunc_max) return 0.0;
  double dens = 0;
  for (const DelayComponent& c : components) {
    if (c.sigma == 0)
      throw ConfigError("density undefined for a point-mass delay component");
    dens += c.weight * normal_pdf(x, c.mean, c.sigma);
  }
  return dens / mass_inside();
}

double GaussianMixtureDelay::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    double pick = u(rng);
    const DelayComponent* chosen = &components.back();
    double acc = 0;
    for (const DelayComponent& c : components) {
      acc += c.weight;
      if (pick <= acc) {
        chosen = &c;
        break;
      }
    }
    double x;
    if (chosen->sigma == 0) {
      x = chosen->mean;  // in-window by validate()
    } else {
      x = std::normal_distribution<double>(chosen->mean, chosen->sigma)(rng);
    }
    if (x >= trunc_min && x <= trunc_max) return x;
  }
  throw NumericalError("delay sampling rejection loop failed to terminate");
}

GaussianMixtureDelay mixture_from_range(double lo, double hi,
                                        const std::string& label) {
  if (!(hi > lo)) throw ConfigError("delay range must have hi > lo");
  double span = hi - lo;
  GaussianMixtureDelay m;
  m.components = {{0.5, lo + 0.25 * span, span / 8.0},
                  {0.5, lo + 0.75 * span, span / 8.0}};
  m.trunc_min = lo;
  m.trunc_max = hi;
  m.channel_label = label;
  m.validate();
  return m;
}

GaussianMixtureDelay channel_preset(const std::string& label) {
  if (label == "fiber_optic") return mixture_from_range(0.100, 0.150, label);
  if (label == "microwave") return mixture_from_range(0.100, 0.150, label);
  if (label == "plc") return mixture_from_range(0.150, 0.350, label);
  if (label == "telephone") return mixture_from_range(0.200, 0.300, label);
  if (label == "satellite") return mixture_from_range(0.500, 0.700, label);
  throw ConfigError("unknown channel label '" + label + "'");
}

GaussianMixtureDelay constant_delay(double value) {
  if (value < 0) throw ConfigError("constant delay must be non-negative");
  GaussianMixtureDelay m;
  m.components = {{1.0, value, 0.0}};
  m.trunc_min = value;
  m.trunc_max = value;
  m.channel_label = "custom";
  m.validate();
  return m;
}

MeasurementBuffer::MeasurementBuffer(std::size_t capacity)
    : cap_(capacity), last_emit_(-std::numeric_limits<double>::infinity()) {
  if (capacity == 0) throw ConfigError("measurement buffer capacity must be > 0");
}

void MeasurementBuffer::clear() {
  entries_.clear();
  last_emit_ = -std::numeric_limits<double>::infinity();
}

void MeasurementBuffer::push(const MeasurementPayload& payload,
                             const GaussianMixtureDelay& model,
                             std::mt19937_64& rng) {
  if (payload.t < last_emit_)
    throw ConfigError("measurement emission times must be non-decreasing");
  last_emit_ = payload.t;
  Entry e;
  e.payload = payload;
  e.arrive = payload.t + model.sample(rng);
  if (entries_.size() == cap_) entries_.pop_front();
  entries_.push_back(std::move(e));
}

std::optional<MeasurementPayload> MeasurementBuffer::read(double now) const {
  // newest emissions sit at the back; the first arrived one wins
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->arrive <= now) return it->payload;
  return std::nullopt;
}

}  // namespace lfo
