#include "encagg/generator.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "encagg/error.hpp"

namespace encagg {
namespace {

constexpr double kProbabilityClamp = 1e-7;
// Keeps confidences strictly inside (0, 1) when the logit saturates.
constexpr double kConfidenceFloor = 1e-15;

double Sigmoid(double x) {
  const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return std::clamp(s, kConfidenceFloor, 1.0 - kConfidenceFloor);
}

Matrix XavierUniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
  return m;
}

template <typename Visitor>
void VisitTensors(GeneratorModel& model, Visitor&& visit) {
  visit("w1", model.w1.data(), model.w1.rows(), model.w1.cols());
  visit("b1", model.b1.data(), model.b1.size(), Eigen::Index{1});
  visit("w2", model.w2.data(), model.w2.rows(), model.w2.cols());
  visit("b2", model.b2.data(), model.b2.size(), Eigen::Index{1});
  visit("w3", model.w3.data(), model.w3.rows(), model.w3.cols());
  visit("b3", model.b3.data(), model.b3.size(), Eigen::Index{1});
  visit("wg", model.wg.data(), model.wg.rows(), model.wg.cols());
  visit("bg", model.bg.data(), model.bg.size(), Eigen::Index{1});
  visit("wy", model.wy.data(), model.wy.size(), Eigen::Index{1});
  visit("by", &model.by, Eigen::Index{1}, Eigen::Index{1});
}

struct ForwardCache {
  Matrix h1, h2, h3;  // n x hidden
  Matrix raw;         // n x 2, tanh of the gradient head
  Vector confidence;  // n
  Points2 points;
};

ForwardCache Forward(const GeneratorModel& model, const Matrix& noise) {
  if (static_cast<std::size_t>(noise.cols()) != model.noise_dim) {
    throw Error(ErrorCode::kInvalidInput, "noise dimension does not match generator");
  }
  if (!noise.allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite noise");
  ForwardCache c;
  c.h1 = ((noise * model.w1.transpose()).rowwise() + model.b1.transpose()).array().tanh();
  c.h2 = ((c.h1 * model.w2.transpose()).rowwise() + model.b2.transpose()).array().tanh();
  c.h3 = ((c.h2 * model.w3.transpose()).rowwise() + model.b3.transpose()).array().tanh();
  c.raw = ((c.h3 * model.wg.transpose()).rowwise() + model.bg.transpose()).array().tanh();
  const Vector logits = (c.h3 * model.wy).array() + model.by;
  c.confidence = logits.unaryExpr([](double x) { return Sigmoid(x); });
  c.points.reserve(static_cast<std::size_t>(noise.rows()));
  for (Eigen::Index j = 0; j < noise.rows(); ++j) {
    c.points.push_back(model.output_center + model.output_scale * c.raw.row(j).transpose());
  }
  return c;
}

}  // namespace

GeneratorModel GeneratorModel::Zero(std::size_t noise_dim, std::size_t hidden_dim) {
  if (noise_dim < 1 || hidden_dim < 2) throw Error(ErrorCode::kInvalidInput, "generator needs noise_dim >= 1 and hidden_dim >= 2");
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  const auto g = static_cast<Eigen::Index>(noise_dim);
  GeneratorModel m;
  m.noise_dim = noise_dim;
  m.hidden_dim = hidden_dim;
  m.w1 = Matrix::Zero(h, g);
  m.w2 = Matrix::Zero(h, h);
  m.w3 = Matrix::Zero(h, h);
  m.b1 = Vector::Zero(h);
  m.b2 = Vector::Zero(h);
  m.b3 = Vector::Zero(h);
  m.wg = Matrix::Zero(2, h);
  m.bg = Vector::Zero(2);
  m.wy = Vector::Zero(h);
  return m;
}

GeneratorModel GeneratorModel::Random(std::size_t noise_dim, std::size_t hidden_dim,
                                      std::mt19937_64& rng) {
  GeneratorModel m = Zero(noise_dim, hidden_dim);
  m.w1 = XavierUniform(hidden_dim, noise_dim, rng);
  m.w2 = XavierUniform(hidden_dim, hidden_dim, rng);
  m.w3 = XavierUniform(hidden_dim, hidden_dim, rng);
  m.wg = XavierUniform(2, hidden_dim, rng);
  m.wy = XavierUniform(1, hidden_dim, rng).row(0).transpose();
  return m;
}

std::size_t GeneratorModel::ParameterCount() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() +
                                  b3.size() + wg.size() + bg.size() + wy.size() + 1);
}

Vector GeneratorModel::Parameters() const {
  Vector flat(static_cast<Eigen::Index>(ParameterCount()));
  Eigen::Index offset = 0;
  VisitTensors(const_cast<GeneratorModel&>(*this),
               [&](const char*, double* data, Eigen::Index rows, Eigen::Index cols) {
                 flat.segment(offset, rows * cols) = Eigen::Map<const Vector>(data, rows * cols);
                 offset += rows * cols;
               });
  return flat;
}

void GeneratorModel::SetParameters(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != ParameterCount()) {
    throw Error(ErrorCode::kInvalidInput, "parameter vector has the wrong length");
  }
  Eigen::Index offset = 0;
  VisitTensors(*this, [&](const char*, double* data, Eigen::Index rows, Eigen::Index cols) {
    Eigen::Map<Vector>(data, rows * cols) = flat.segment(offset, rows * cols);
    offset += rows * cols;
  });
}

void AnchorGenerator(GeneratorModel& model, const Point2& center, double epsilon, double gamma) {
  model.output_center = center;
  // 2 * epsilon * (1 + gamma) / 2; floored so a zero radius keeps the head invertible.
  model.output_scale = std::max(epsilon * (1.0 + gamma), 1e-12);
}

PseudoGradientBatch Generate(const GeneratorModel& model, const Matrix& noise) {
  ForwardCache c = Forward(model, noise);
  PseudoGradientBatch batch;
  batch.points = std::move(c.points);
  batch.confidences.assign(c.confidence.data(), c.confidence.data() + c.confidence.size());
  batch.source_noise = noise;
  return batch;
}

Matrix SampleNoise(std::size_t count, std::size_t noise_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(noise_dim));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
  }
  return z;
}

double LossClust(const std::vector<double>& confidences, const std::vector<int>& labels,
                 double w1, double w0) {
  if (!(w1 > w0 && w0 > 0.0)) throw Error(ErrorCode::kInvalidInput, "loss weights need w1 > w0 > 0");
  if (confidences.size() != labels.size() || confidences.empty()) {
    throw Error(ErrorCode::kInvalidInput, "confidences and labels must be non-empty and aligned");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < confidences.size(); ++j) {
    const double p = std::clamp(confidences[j], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum += labels[j] != 0 ? w1 * std::log(p) : w0 * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(confidences.size());
}

namespace {

struct AxisStats {
  Eigen::Vector2d mean;
  Eigen::Vector2d std;
};

AxisStats OffsetStats(const Points2& points, const Point2& center) {
  const double n = static_cast<double>(points.size());
  AxisStats s{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  for (const auto& p : points) s.mean += p - center;
  s.mean /= n;
  for (const auto& p : points) {
    const Eigen::Vector2d dev = (p - center) - s.mean;
    s.std += dev.cwiseProduct(dev);
  }
  s.std = (s.std / n).cwiseSqrt();
  return s;
}

}  // namespace

double LossDir(const Points2& points, const Point2& benign_center, double tau) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "direction loss needs points");
  const AxisStats s = OffsetStats(points, benign_center);
  return std::abs(s.mean.x()) + std::abs(s.mean.y()) + std::max(0.0, tau - s.std.x()) +
         std::max(0.0, tau - s.std.y());
}

double LossDis(const Points2& points, double rho, double epsilon) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "distance loss needs points");
  const double target = rho * epsilon;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double gap = target - (points[i] - points[j]).norm();
      if (gap > 0.0) sum += gap * gap;
    }
  }
  return sum / static_cast<double>(points.size());
}

GeneratorEvaluation EvaluateGenerator(const GeneratorModel& model, const Matrix& noise,
                                      const std::vector<int>& labels,
                                      const Point2& benign_center, double epsilon,
                                      const GeneratorHyper& hyper) {
  const auto n = static_cast<std::size_t>(noise.rows());
  if (n == 0 || labels.size() != n) throw Error(ErrorCode::kInvalidInput, "labels must match the noise batch");
  const ForwardCache c = Forward(model, noise);
  const double nd = static_cast<double>(n);

  GeneratorEvaluation eval;
  std::vector<double> conf(c.confidence.data(), c.confidence.data() + c.confidence.size());
  eval.report.labels = labels;
  eval.report.l_clust = LossClust(conf, labels, hyper.w1, hyper.w0);
  eval.report.l_dir = LossDir(c.points, benign_center, hyper.tau);
  eval.report.l_dis = LossDis(c.points, hyper.rho, epsilon);
  eval.report.l_total = eval.report.l_clust + hyper.alpha * eval.report.l_dir +
                        hyper.beta * eval.report.l_dis;

  // d loss / d confidence logit.
  Vector d_logit(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double p = conf[j];
    const double y = labels[j] != 0 ? 1.0 : 0.0;
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) {
      d_logit(static_cast<Eigen::Index>(j)) = 0.0;
    } else {
      d_logit(static_cast<Eigen::Index>(j)) = -(hyper.w1 * y * (1.0 - p) - hyper.w0 * (1.0 - y) * p) / nd;
    }
  }

  // d loss / d pseudo-gradient, from the direction and distance terms.
  Matrix d_point = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
  const AxisStats s = OffsetStats(c.points, benign_center);
  for (int axis = 0; axis < 2; ++axis) {
    const double mean_sign = s.mean(axis) > 0 ? 1.0 : (s.mean(axis) < 0 ? -1.0 : 0.0);
    const bool spread_active = s.std(axis) < hyper.tau && s.std(axis) > 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double g = mean_sign / nd;
      if (spread_active) {
        const double dev = (c.points[j](axis) - benign_center(axis)) - s.mean(axis);
        g -= dev / (nd * s.std(axis));
      }
      d_point(static_cast<Eigen::Index>(j), axis) += hyper.alpha * g;
    }
  }
  const double target = hyper.rho * epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2 diff = c.points[i] - c.points[j];
      const double dist = diff.norm();
      if (dist >= target || dist == 0.0) continue;
      const Point2 g = (-2.0 * (target - dist) / (nd * dist)) * diff * hyper.beta;
      d_point.row(static_cast<Eigen::Index>(i)) += g.transpose();
      d_point.row(static_cast<Eigen::Index>(j)) -= g.transpose();
    }
  }

  // Back through the heads and the three hidden layers.
  const Matrix d_raw_pre =
      (d_point * model.output_scale).array() * (1.0 - c.raw.array().square());
  GeneratorModel grad = GeneratorModel::Zero(model.noise_dim, model.hidden_dim);
  grad.wg = d_raw_pre.transpose() * c.h3;
  grad.bg = d_raw_pre.colwise().sum().transpose();
  grad.wy = c.h3.transpose() * d_logit;
  grad.by = d_logit.sum();

  const Matrix d_h3 = d_raw_pre * model.wg + d_logit * model.wy.transpose();
  const Matrix d_a3 = d_h3.array() * (1.0 - c.h3.array().square());
  grad.w3 = d_a3.transpose() * c.h2;
  grad.b3 = d_a3.colwise().sum().transpose();

  const Matrix d_a2 = (d_a3 * model.w3).array() * (1.0 - c.h2.array().square());
  grad.w2 = d_a2.transpose() * c.h1;
  grad.b2 = d_a2.colwise().sum().transpose();

  const Matrix d_a1 = (d_a2 * model.w2).array() * (1.0 - c.h1.array().square());
  grad.w1 = d_a1.transpose() * noise;
  grad.b1 = d_a1.colwise().sum().transpose();

  eval.gradient = grad.Parameters();
  return eval;
}

std::pair<GeneratorModel, GeneratorLossReport> TrainStep(const GeneratorModel& model,
                                                         const Matrix& noise,
                                                         const std::vector<int>& labels,
                                                         const Point2& benign_center,
                                                         double epsilon,
                                                         const GeneratorHyper& hyper) {
  if (!(hyper.lr > 0.0)) throw Error(ErrorCode::kInvalidInput, "generator learning rate must be positive");
  GeneratorEvaluation eval = EvaluateGenerator(model, noise, labels, benign_center, epsilon, hyper);
  const auto& r = eval.report;
  if (!std::isfinite(r.l_clust) || !std::isfinite(r.l_dir) || !std::isfinite(r.l_dis) ||
      !std::isfinite(r.l_total) || !eval.gradient.allFinite()) {
    throw Error(ErrorCode::kNonFiniteLoss, "generator loss or gradient is not finite");
  }
  GeneratorModel next = model;
  next.SetParameters(model.Parameters() - hyper.lr * eval.gradient);
  return {std::move(next), std::move(eval.report)};
}

std::string SaveGeneratorJson(const GeneratorModel& model) {
  nlohmann::json j;
  j["version"] = kGeneratorCheckpointVersion;
  j["noise_dim"] = model.noise_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["output_scale"] = model.output_scale;
  j["output_center"] = {model.output_center.x(), model.output_center.y()};
  nlohmann::json tensors = nlohmann::json::array();
  VisitTensors(const_cast<GeneratorModel&>(model),
               [&](const char* name, double* data, Eigen::Index rows, Eigen::Index cols) {
                 // Stored row-major regardless of Eigen's internal layout.
                 std::vector<double> values;
                 values.reserve(static_cast<std::size_t>(rows * cols));
                 Eigen::Map<const Matrix> view(data, rows, cols);
                 for (Eigen::Index r = 0; r < rows; ++r) {
                   for (Eigen::Index c = 0; c < cols; ++c) values.push_back(view(r, c));
                 }
                 tensors.push_back({{"name", name}, {"shape", {rows, cols}}, {"data", values}});
               });
  j["tensors"] = std::move(tensors);
  return j.dump(2);
}

GeneratorModel LoadGeneratorJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("generator checkpoint is not JSON: ") + e.what());
  }
  if (j.value("version", std::string{}) != kGeneratorCheckpointVersion) {
    throw Error(ErrorCode::kInvalidInput, "unsupported generator checkpoint version");
  }
  GeneratorModel model = GeneratorModel::Zero(j.at("noise_dim").get<std::size_t>(),
                                               j.at("hidden_dim").get<std::size_t>());
  model.output_scale = j.at("output_scale").get<double>();
  model.output_center = Point2(j.at("output_center").at(0).get<double>(),
                               j.at("output_center").at(1).get<double>());
  const auto& tensors = j.at("tensors");
  std::size_t index = 0;
  VisitTensors(model, [&](const char* name, double* data, Eigen::Index rows, Eigen::Index cols) {
    if (index >= tensors.size()) throw Error(ErrorCode::kInvalidInput, "checkpoint is missing tensors");
    const auto& t = tensors.at(index++);
    if (t.at("name").get<std::string>() != name || t.at("shape").at(0).get<Eigen::Index>() != rows ||
        t.at("shape").at(1).get<Eigen::Index>() != cols) {
      throw Error(ErrorCode::kInvalidInput, std::string("checkpoint tensor mismatch at ") + name);
    }
    const auto values = t.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
      throw Error(ErrorCode::kInvalidInput, std::string("checkpoint tensor size mismatch at ") + name);
    }
    Eigen::Map<Matrix> view(data, rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) view(r, c) = values[static_cast<std::size_t>(r * cols + c)];
    }
  });
  if (!model.Parameters().allFinite() || !(model.output_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "checkpoint holds invalid parameters");
  }
  return model;
}

}  // namespace encagg
