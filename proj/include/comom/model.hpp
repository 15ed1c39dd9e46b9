// Copyright 2026 The comom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Multinomial logistic regression over hashed sparse features, trained with
// AdamW (decoupled weight decay) on seeded mini-batches.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "comom/backend.hpp"
#include "comom/error.hpp"
#include "comom/features.hpp"
#include "comom/random.hpp"
#include "json.hpp"

namespace comom {

struct TrainConfig {
  double learning_rate = 3e-5;
  std::size_t batch_size = 32;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint32_t hash_dim = kDefaultHashDim;
  std::uint64_t hash_salt = 0;
  // Tag task only: also learn from non-comparative sentences (all-O rows), so
  // the tagger can stand in for the sentence classifier.
  bool include_non_comparative = false;

  void validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate))
      fail(ErrorCode::kInvalidArgument, "learning_rate must be positive");
    if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be at least 1");
    if (epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be at least 1");
    if (weight_decay < 0) fail(ErrorCode::kInvalidArgument, "weight_decay must be non-negative");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      fail(ErrorCode::kInvalidArgument, "betas must lie in [0, 1)");
    if (!(epsilon > 0)) fail(ErrorCode::kInvalidArgument, "epsilon must be positive");
    if (hash_dim < 1) fail(ErrorCode::kInvalidArgument, "hash_dim must be positive");
  }

  bool operator==(const TrainConfig&) const = default;
};

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["hash_dim"] = c.hash_dim;
  j["hash_salt"] = c.hash_salt;
  j["include_non_comparative"] = c.include_non_comparative;
  return j;
}

// Missing keys keep their defaults (or the values already in `base`).
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "train config must be a JSON object");
  try {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.epochs = j.value("epochs", base.epochs);
    base.seed = j.value("seed", base.seed);
    base.weight_decay = j.value("weight_decay", base.weight_decay);
    base.beta1 = j.value("beta1", base.beta1);
    base.beta2 = j.value("beta2", base.beta2);
    base.epsilon = j.value("epsilon", base.epsilon);
    base.hash_dim = j.value("hash_dim", base.hash_dim);
    base.hash_salt = j.value("hash_salt", base.hash_salt);
    base.include_non_comparative = j.value("include_non_comparative", base.include_non_comparative);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("train config: ") + e.what());
  }
  base.validate();
  return base;
}

struct Example {
  FeatureVector features;
  std::uint32_t label = 0;
};

// Examples that travel together through mini-batching (one sentence's worth).
using ExampleGroup = std::vector<Example>;

struct Gradient {
  std::vector<double> weights;  // dim x classes, row-major by feature
  std::vector<double> bias;
};

class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Task task, std::size_t classes, std::uint32_t dim, std::uint64_t salt)
      : task_(task),
        classes_(classes),
        dim_(dim),
        salt_(salt),
        weights_(static_cast<std::size_t>(dim) * classes, 0.0),
        bias_(classes, 0.0) {}

  Task task() const { return task_; }
  std::size_t classes() const { return classes_; }
  std::uint32_t dim() const { return dim_; }
  std::uint64_t salt() const { return salt_; }

  double& weight(std::uint32_t feature, std::size_t cls) { return weights_[feature * classes_ + cls]; }
  double weight(std::uint32_t feature, std::size_t cls) const { return weights_[feature * classes_ + cls]; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  const TrainConfig& train_config() const { return train_config_; }
  void set_train_config(const TrainConfig& c) { train_config_ = c; }
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }
  void set_epoch_losses(std::vector<double> l) { epoch_losses_ = std::move(l); }

  LogitVector logits(const FeatureVector& x) const {
    LogitVector z(bias_);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double* row = &weights_[static_cast<std::size_t>(x.indices[k]) * classes_];
      const double v = x.values[k];
      for (std::size_t c = 0; c < classes_; ++c) z[c] += row[c] * v;
    }
    return z;
  }

  // Mean softmax cross-entropy.
  double loss(std::span<const Example> examples) const {
    if (examples.empty()) return 0.0;
    double total = 0;
    for (const Example& e : examples) {
      const LogitVector z = logits(e.features);
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (double v : z) s += std::exp(v - m);
      total += (m + std::log(s)) - z[e.label];
    }
    return total / static_cast<double>(examples.size());
  }

  // Dense gradient of loss(); intended for small models and checks.
  Gradient gradient(std::span<const Example> examples) const {
    Gradient g{std::vector<double>(weights_.size(), 0.0), std::vector<double>(classes_, 0.0)};
    accumulate_gradient(examples, [&](std::uint32_t feature, std::size_t cls, double v) {
      g.weights[feature * classes_ + cls] += v;
    }, g.bias);
    return g;
  }

  // Calls add(feature, class, value) for every non-zero weight-gradient term
  // and adds bias terms into `bias_grad`.
  template <typename Add>
  void accumulate_gradient(std::span<const Example> examples, Add&& add,
                           std::vector<double>& bias_grad) const {
    if (examples.empty()) return;
    const double scale = 1.0 / static_cast<double>(examples.size());
    LogitVector p(classes_);
    for (const Example& e : examples) {
      const LogitVector z = logits(e.features);
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (std::size_t c = 0; c < classes_; ++c) {
        p[c] = std::exp(z[c] - m);
        s += p[c];
      }
      for (std::size_t c = 0; c < classes_; ++c) {
        p[c] = (p[c] / s - (c == e.label ? 1.0 : 0.0)) * scale;
        bias_grad[c] += p[c];
      }
      for (std::size_t k = 0; k < e.features.size(); ++k) {
        const double v = e.features.values[k];
        for (std::size_t c = 0; c < classes_; ++c) add(e.features.indices[k], c, p[c] * v);
      }
    }
  }

  // Binary container: magic, format version, task, alphabet size, hashing
  // parameters, training config echo, bias, then the non-zero weight rows.
  void save(std::ostream& out) const;
  static LinearModel load(std::istream& in);

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot write model '" + path.string() + "'");
    save(out);
    out.flush();
    if (!out) fail(ErrorCode::kIoError, "write failed for model '" + path.string() + "'");
  }

  static LinearModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIoError, "cannot open model '" + path.string() + "'");
    try {
      return load(in);
    } catch (const Error& e) {
      fail(e.code(), path.string() + ": " + e.detail());
    }
  }

 private:
  Task task_ = Task::kSentence;
  std::size_t classes_ = 0;
  std::uint32_t dim_ = 0;
  std::uint64_t salt_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  TrainConfig train_config_;
  std::vector<double> epoch_losses_;
};

namespace detail {

inline constexpr char kModelMagic[8] = {'C', 'O', 'M', 'O', 'M', 'L', 'M', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}
inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}
inline void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) fail(ErrorCode::kModelFormatError, "truncated model file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) fail(ErrorCode::kModelFormatError, "truncated model file");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline void LinearModel::save(std::ostream& out) const {
  out.write(detail::kModelMagic, sizeof detail::kModelMagic);
  detail::put_u32(out, detail::kModelFormatVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(task_));
  detail::put_u32(out, static_cast<std::uint32_t>(classes_));
  detail::put_u32(out, dim_);
  detail::put_u64(out, salt_);
  detail::put_f64(out, train_config_.learning_rate);
  detail::put_u64(out, train_config_.batch_size);
  detail::put_u64(out, train_config_.epochs);
  detail::put_u64(out, train_config_.seed);
  detail::put_f64(out, train_config_.weight_decay);
  detail::put_u32(out, train_config_.include_non_comparative ? 1 : 0);
  detail::put_u64(out, epoch_losses_.size());
  for (double l : epoch_losses_) detail::put_f64(out, l);
  for (double b : bias_) detail::put_f64(out, b);
  std::uint64_t rows = 0;
  for (std::uint32_t f = 0; f < dim_; ++f) {
    for (std::size_t c = 0; c < classes_; ++c) {
      if (weight(f, c) != 0.0) {
        ++rows;
        break;
      }
    }
  }
  detail::put_u64(out, rows);
  for (std::uint32_t f = 0; f < dim_; ++f) {
    bool nonzero = false;
    for (std::size_t c = 0; c < classes_ && !nonzero; ++c) nonzero = weight(f, c) != 0.0;
    if (!nonzero) continue;
    detail::put_u32(out, f);
    for (std::size_t c = 0; c < classes_; ++c) detail::put_f64(out, weight(f, c));
  }
}

inline LinearModel LinearModel::load(std::istream& in) {
  char magic[sizeof detail::kModelMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, detail::kModelMagic, sizeof magic) != 0) {
    fail(ErrorCode::kModelFormatError, "not a comom model file");
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != detail::kModelFormatVersion) {
    fail(ErrorCode::kModelFormatError, "unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t task = detail::get_u32(in);
  if (task > static_cast<std::uint32_t>(Task::kQuadruple)) {
    fail(ErrorCode::kModelFormatError, "unknown task id " + std::to_string(task));
  }
  const std::uint32_t classes = detail::get_u32(in);
  const std::uint32_t dim = detail::get_u32(in);
  if (classes != output_width(static_cast<Task>(task)) || dim == 0) {
    fail(ErrorCode::kModelFormatError, "inconsistent model header");
  }
  LinearModel m(static_cast<Task>(task), classes, dim, detail::get_u64(in));
  TrainConfig c;
  c.learning_rate = detail::get_f64(in);
  c.batch_size = detail::get_u64(in);
  c.epochs = detail::get_u64(in);
  c.seed = detail::get_u64(in);
  c.weight_decay = detail::get_f64(in);
  c.include_non_comparative = detail::get_u32(in) != 0;
  c.hash_dim = dim;
  c.hash_salt = m.salt_;
  m.train_config_ = c;
  const std::uint64_t epochs = detail::get_u64(in);
  if (epochs > (1u << 20)) fail(ErrorCode::kModelFormatError, "implausible epoch count");
  for (std::uint64_t i = 0; i < epochs; ++i) m.epoch_losses_.push_back(detail::get_f64(in));
  for (double& b : m.bias_) b = detail::get_f64(in);
  const std::uint64_t rows = detail::get_u64(in);
  if (rows > dim) fail(ErrorCode::kModelFormatError, "more weight rows than features");
  for (std::uint64_t r = 0; r < rows; ++r) {
    const std::uint32_t f = detail::get_u32(in);
    if (f >= dim) fail(ErrorCode::kModelFormatError, "weight row index out of range");
    for (std::size_t k = 0; k < classes; ++k) m.weight(f, k) = detail::get_f64(in);
  }
  return m;
}

// Trains `model` in place. Each epoch shuffles the groups with the seeded
// generator, cuts them into mini-batches of `batch_size` groups and takes one
// AdamW step per batch. Returns the full training-set loss after each epoch.
//
// Only rows that have received a gradient are visited: an untouched row has
// zero weights and zero moments, so the dense update would leave it at zero.
inline std::vector<double> train_linear(LinearModel& model, const std::vector<ExampleGroup>& groups,
                                        const TrainConfig& config) {
  config.validate();
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  if (total == 0) fail(ErrorCode::kEmptyTrainingSet, "no training examples");

  const std::size_t C = model.classes();
  std::vector<double> m(model.weights().size(), 0.0), v(model.weights().size(), 0.0);
  std::vector<double> mb(C, 0.0), vb(C, 0.0);
  std::vector<double> grad(model.weights().size(), 0.0);
  std::vector<char> active(model.dim(), 0);
  std::vector<std::uint32_t> active_rows;
  std::vector<std::uint32_t> batch_rows;
  std::vector<char> in_batch(model.dim(), 0);

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);

  std::vector<Example> all;
  all.reserve(total);
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());

  std::vector<double> losses;
  std::uint64_t step = 0;
  std::vector<Example> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& g = groups[order[i]];
        batch.insert(batch.end(), g.begin(), g.end());
      }
      if (batch.empty()) continue;

      std::vector<double> gb(C, 0.0);
      model.accumulate_gradient(std::span<const Example>(batch),
                                [&](std::uint32_t f, std::size_t c, double val) {
                                  if (!in_batch[f]) {
                                    in_batch[f] = 1;
                                    batch_rows.push_back(f);
                                    if (!active[f]) {
                                      active[f] = 1;
                                      active_rows.push_back(f);
                                    }
                                  }
                                  grad[static_cast<std::size_t>(f) * C + c] += val;
                                },
                                gb);

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto& w = model.weights();
      for (std::uint32_t f : active_rows) {
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t k = static_cast<std::size_t>(f) * C + c;
          const double g = grad[k];
          m[k] = config.beta1 * m[k] + (1 - config.beta1) * g;
          v[k] = config.beta2 * v[k] + (1 - config.beta2) * g * g;
          const double mhat = m[k] / bc1;
          const double vhat = v[k] / bc2;
          w[k] -= config.learning_rate * (mhat / (std::sqrt(vhat) + config.epsilon) +
                                          config.weight_decay * w[k]);
        }
      }
      auto& b = model.bias();
      for (std::size_t c = 0; c < C; ++c) {
        mb[c] = config.beta1 * mb[c] + (1 - config.beta1) * gb[c];
        vb[c] = config.beta2 * vb[c] + (1 - config.beta2) * gb[c] * gb[c];
        b[c] -= config.learning_rate * ((mb[c] / bc1) / (std::sqrt(vb[c] / bc2) + config.epsilon));
      }
      for (std::uint32_t f : batch_rows) {
        in_batch[f] = 0;
        std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(f) * static_cast<std::ptrdiff_t>(C), C, 0.0);
      }
      batch_rows.clear();
    }
    losses.push_back(model.loss(all));
  }
  model.set_train_config(config);
  model.set_epoch_losses(losses);
  return losses;
}

}  // namespace comom
