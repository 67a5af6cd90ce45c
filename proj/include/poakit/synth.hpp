#pragma once

#include "poakit/core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace poakit {

/// Portable Gaussian stream: std::mt19937_64 (whose output sequence the C++
/// standard fixes), 53-bit uniforms u = (x >> 11) * 2^-53, and Box-Muller
/// pairs z0 = r cos(2 pi u2), z1 = r sin(2 pi u2) with r = sqrt(-2 ln(1 - u1)).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct SineComponent {
  double amplitude = 1.0;
  double period = 24.0;
  double phase = 0.0;
};

struct Ar1Component {
  double coef = 0.6;
  double noise_std = 0.2;
};

struct VariableBase {
  double offset = 0.0;
  std::vector<SineComponent> sines;
  std::vector<Ar1Component> ar1;
};

enum class AnomalyKind { spike, level_shift, variance_burst };
std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(const std::string& text);

struct InjectedAnomaly {
  Index start = 0;
  Index length = 1;
  AnomalyKind kind = AnomalyKind::spike;
  double magnitude = 3.0;
};

/// Drift ramps over the `lead` steps before each anomaly; the innovation noise
/// is inflated over the last `length` of them.
struct PrecursorConfig {
  Index lead = 20;
  Index length = 20;
  double drift_magnitude = 1.0;
  double noise_inflation = 2.0;
};

struct SynthConfig {
  Index length = 5000;        ///< test length T
  Index train_length = 5000;  ///< anomaly-free series preceding the test part
  Index variables = 3;
  std::vector<VariableBase> base;  ///< one entry per variable
  std::vector<InjectedAnomaly> anomalies;
  PrecursorConfig precursor;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Three sine + AR(1) variables, six anomalies with 20-step precursors.
SynthConfig default_synth_config();

std::string synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const std::string& text);

struct SynthDataset {
  TimeSeries train;
  TimeSeries test;
  LabelSequence labels;
  std::vector<Segment> precursor_truth;
};

SynthDataset generate(const SynthConfig& cfg);

}  // namespace poakit
