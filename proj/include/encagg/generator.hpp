#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "encagg/types.hpp"

namespace encagg {

inline constexpr std::size_t kDefaultPseudoGradientCount = 100;
inline constexpr const char* kGeneratorCheckpointVersion = "encagg-gen-v1";

// Noise -> three tanh layers -> (2D pseudo-gradient, membership confidence).
// The gradient head is squashed by tanh and mapped onto
// output_center + output_scale * tanh(.), so it can reach the benign cluster
// at whatever scale the projected gradients live.
struct GeneratorModel {
  std::size_t noise_dim = 16;
  std::size_t hidden_dim = 32;

  Matrix w1, w2, w3;   // hidden x noise_dim, hidden x hidden, hidden x hidden
  Vector b1, b2, b3;
  Matrix wg;           // 2 x hidden
  Vector bg;           // 2
  Vector wy;           // hidden
  double by = 0.0;

  double output_scale = 1.0;
  Point2 output_center = Point2::Zero();

  static GeneratorModel Zero(std::size_t noise_dim, std::size_t hidden_dim);
  // Xavier-uniform weights, zero biases.
  static GeneratorModel Random(std::size_t noise_dim, std::size_t hidden_dim, std::mt19937_64& rng);

  std::size_t ParameterCount() const;
  Vector Parameters() const;
  void SetParameters(const Vector& flat);

  bool operator==(const GeneratorModel&) const = default;
};

// Re-anchors the gradient head at `center` with scale epsilon * (1 + gamma).
void AnchorGenerator(GeneratorModel& model, const Point2& center, double epsilon, double gamma);

struct PseudoGradientBatch {
  Points2 points;
  std::vector<double> confidences;  // strictly inside (0, 1)
  Matrix source_noise;              // n_gen x noise_dim
};

PseudoGradientBatch Generate(const GeneratorModel& model, const Matrix& noise);

Matrix SampleNoise(std::size_t count, std::size_t noise_dim, std::mt19937_64& rng);

struct GeneratorHyper {
  double alpha = 1.0;
  double beta = 1.0;
  double w1 = 2.0;
  double w0 = 1.0;
  double tau = 0.25;  // absolute dispersion threshold; the pipeline sets 0.25 * epsilon
  double rho = 0.5;
  double lr = 1e-3;
};

struct GeneratorLossReport {
  double l_clust = 0.0;
  double l_dir = 0.0;
  double l_dis = 0.0;
  double l_total = 0.0;
  std::vector<int> labels;
};

double LossClust(const std::vector<double>& confidences, const std::vector<int>& labels,
                 double w1, double w0);
double LossDir(const Points2& points, const Point2& benign_center, double tau);
double LossDis(const Points2& points, double rho, double epsilon);

struct GeneratorEvaluation {
  GeneratorLossReport report;
  Vector gradient;  // d loss / d Parameters()
};

// Full forward and backward pass. Labels are constants.
GeneratorEvaluation EvaluateGenerator(const GeneratorModel& model, const Matrix& noise,
                                      const std::vector<int>& labels,
                                      const Point2& benign_center, double epsilon,
                                      const GeneratorHyper& hyper);

// One plain gradient-descent step. Returns the updated model and the loss
// measured before the step. Throws kNonFiniteLoss.
std::pair<GeneratorModel, GeneratorLossReport> TrainStep(const GeneratorModel& model,
                                                         const Matrix& noise,
                                                         const std::vector<int>& labels,
                                                         const Point2& benign_center,
                                                         double epsilon,
                                                         const GeneratorHyper& hyper);

std::string SaveGeneratorJson(const GeneratorModel& model);
GeneratorModel LoadGeneratorJson(const std::string& text);

}  // namespace encagg
