#include "encagg/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "encagg/error.hpp"

namespace encagg {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double ToDouble(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::kConfigError, key + " expects a number, got '" + value + "'");
  return out;
}

std::uint64_t ToUnsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::kConfigError, key + " expects a non-negative integer, got '" + value + "'");
  }
  return out;
}

int ToInt(const std::string& key, const std::string& value) {
  int out = 0;
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), last, out);
  if (ec != std::errc() || ptr != last) throw Error(ErrorCode::kConfigError, key + " expects an integer, got '" + value + "'");
  return out;
}

bool ToBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::kConfigError, key + " expects true or false, got '" + value + "'");
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Declaration order is serialization order.
const std::vector<std::pair<std::string, Field>>& Fields() {
  static const std::vector<std::pair<std::string, Field>> fields = [] {
    std::vector<std::pair<std::string, Field>> f;
    auto num = [&](const std::string& key, auto getter) {
      f.push_back({key, Field{[key, getter](ExperimentConfig& c, const std::string& v) { getter(c) = ToDouble(key, v); },
                              [getter](const ExperimentConfig& c) {
                                return FormatDouble(getter(const_cast<ExperimentConfig&>(c)));
                              }}});
    };
    auto count = [&](const std::string& key, auto getter) {
      f.push_back({key, Field{[key, getter](ExperimentConfig& c, const std::string& v) {
                                getter(c) = static_cast<std::remove_reference_t<decltype(getter(c))>>(ToUnsigned(key, v));
                              },
                              [getter](const ExperimentConfig& c) {
                                return std::to_string(getter(const_cast<ExperimentConfig&>(c)));
                              }}});
    };
    auto flag = [&](const std::string& key, auto getter) {
      f.push_back({key, Field{[key, getter](ExperimentConfig& c, const std::string& v) { getter(c) = ToBool(key, v); },
                              [getter](const ExperimentConfig& c) {
                                return std::string(getter(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
                              }}});
    };

    f.push_back({"task", Field{[](ExperimentConfig& c, const std::string& v) {
                                 auto kind = ParseTaskKind(v);
                                 if (!kind) throw Error(ErrorCode::kConfigError, "task must be linear_regression or logistic_classification");
                                 c.task.kind = *kind;
                               },
                               [](const ExperimentConfig& c) { return std::string(TaskKindName(c.task.kind)); }}});
    f.push_back({"aggregator", Field{[](ExperimentConfig& c, const std::string& v) {
                                       auto kind = ParseAggregatorKind(v);
                                       if (!kind) throw Error(ErrorCode::kConfigError, "aggregator must be one of encagg, mean, krum, median, trimmed_mean, fltrust");
                                       c.aggregator = *kind;
                                     },
                                     [](const ExperimentConfig& c) { return std::string(AggregatorKindName(c.aggregator)); }}});
    f.push_back({"attack", Field{[](ExperimentConfig& c, const std::string& v) {
                                   auto kind = ParseAttackKind(v);
                                   if (!kind) throw Error(ErrorCode::kConfigError, "attack must be one of none, gaussian, sign_flip, scale, lie, min_max, adaptive_subspace");
                                   c.attack.kind = *kind;
                                 },
                                 [](const ExperimentConfig& c) { return std::string(AttackKindName(c.attack.kind)); }}});
    count("seed", [](ExperimentConfig& c) -> std::uint64_t& { return c.seed; });
    count("n", [](ExperimentConfig& c) -> std::size_t& { return c.n; });
    count("k", [](ExperimentConfig& c) -> std::size_t& { return c.k; });
    num("malicious_ratio", [](ExperimentConfig& c) -> double& { return c.malicious_ratio; });
    num("poison_probability", [](ExperimentConfig& c) -> double& { return c.poison_probability; });
    count("rounds", [](ExperimentConfig& c) -> std::size_t& { return c.rounds; });
    num("learning_rate", [](ExperimentConfig& c) -> double& { return c.learning_rate; });
    count("batch_size", [](ExperimentConfig& c) -> std::size_t& { return c.batch_size; });
    num("trim_fraction", [](ExperimentConfig& c) -> double& { return c.trim_fraction; });
    f.push_back({"krum_f", Field{[](ExperimentConfig& c, const std::string& v) { c.krum_f = ToInt("krum_f", v); },
                                 [](const ExperimentConfig& c) { return std::to_string(c.krum_f); }}});

    count("min_samples", [](ExperimentConfig& c) -> std::size_t& { return c.encagg.min_samples; });
    num("r", [](ExperimentConfig& c) -> double& { return c.encagg.r; });
    num("gamma", [](ExperimentConfig& c) -> double& { return c.encagg.gamma; });
    count("n_gen", [](ExperimentConfig& c) -> std::size_t& { return c.encagg.n_gen; });
    flag("generator.enabled", [](ExperimentConfig& c) -> bool& { return c.encagg.enable_generator; });
    count("generator.noise_dim", [](ExperimentConfig& c) -> std::size_t& { return c.encagg.noise_dim; });
    count("generator.hidden_dim", [](ExperimentConfig& c) -> std::size_t& { return c.encagg.hidden_dim; });
    num("generator.alpha", [](ExperimentConfig& c) -> double& { return c.encagg.alpha; });
    num("generator.beta", [](ExperimentConfig& c) -> double& { return c.encagg.beta; });
    num("generator.w1", [](ExperimentConfig& c) -> double& { return c.encagg.w1; });
    num("generator.w0", [](ExperimentConfig& c) -> double& { return c.encagg.w0; });
    num("generator.tau_factor", [](ExperimentConfig& c) -> double& { return c.encagg.tau_factor; });
    num("generator.rho", [](ExperimentConfig& c) -> double& { return c.encagg.rho; });
    num("generator.lr", [](ExperimentConfig& c) -> double& { return c.encagg.generator_lr; });

    num("attack.scale", [](ExperimentConfig& c) -> double& { return c.attack.scale; });
    num("attack.std", [](ExperimentConfig& c) -> double& { return c.attack.std; });
    num("attack.z", [](ExperimentConfig& c) -> double& { return c.attack.z; });
    count("attack.search_iters", [](ExperimentConfig& c) -> std::size_t& { return c.attack.search_iters; });
    num("attack.inplane_fraction", [](ExperimentConfig& c) -> double& { return c.attack.inplane_fraction; });
    num("attack.ortho_multiplier", [](ExperimentConfig& c) -> double& { return c.attack.ortho_multiplier; });
    flag("attack.collusion", [](ExperimentConfig& c) -> bool& { return c.attack.collusion; });

    count("task.dim", [](ExperimentConfig& c) -> std::size_t& { return c.task.dim; });
    num("task.noise_std", [](ExperimentConfig& c) -> double& { return c.task.noise_std; });
    num("task.heterogeneity", [](ExperimentConfig& c) -> double& { return c.task.heterogeneity; });
    num("task.weight_norm", [](ExperimentConfig& c) -> double& { return c.task.weight_norm; });
    count("task.samples_per_client", [](ExperimentConfig& c) -> std::size_t& { return c.task.samples_per_client; });
    count("task.root_samples", [](ExperimentConfig& c) -> std::size_t& { return c.task.root_samples; });
    return f;
  }();
  return fields;
}

const Field* FindField(const std::string& key) {
  for (const auto& [name, field] : Fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

// Field name a validation message refers to ("r must be ..." -> "r").
std::string SubjectOf(const std::string& message) {
  const std::string prefix = std::string(ErrorCodeName(ErrorCode::kConfigError)) + ": ";
  std::string body = message.rfind(prefix, 0) == 0 ? message.substr(prefix.size()) : message;
  return body.substr(0, body.find(' '));
}

std::string StripCode(const std::string& message) {
  const std::string prefix = std::string(ErrorCodeName(ErrorCode::kConfigError)) + ": ";
  return message.rfind(prefix, 0) == 0 ? message.substr(prefix.size()) : message;
}

}  // namespace

void SetConfigValue(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Field* field = FindField(key);
  if (field == nullptr) throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
  field->set(config, value);
}

ExperimentConfig ParseConfigText(const std::string& text) {
  ExperimentConfig config;
  std::map<std::string, int> line_of;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (line_of.count(key) != 0) {
      throw Error(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    try {
      SetConfigValue(config, key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, "line " + std::to_string(line_no) + ": " + StripCode(e.what()));
    }
    line_of[key] = line_no;
  }
  try {
    config.Validate();
  } catch (const Error& e) {
    const auto it = line_of.find(SubjectOf(e.what()));
    const std::string where = it != line_of.end() ? "line " + std::to_string(it->second) + ": " : "";
    throw Error(ErrorCode::kConfigError, where + StripCode(e.what()));
  }
  return config;
}

ExperimentConfig ParseConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfigText(buffer.str());
}

std::string SerializeConfig(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, field] : Fields()) out += name + " = " + field.get(config) + "\n";
  return out;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return SerializeConfig(a) == SerializeConfig(b);
}

}  // namespace encagg
