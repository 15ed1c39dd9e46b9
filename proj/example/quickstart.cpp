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

// Trains the three native stages on a handful of sentences, runs the
// pipeline and scores it against the same sentences.
//
//   ./quickstart

#include <iostream>

#include "comom/comom.hpp"

using namespace comom;

int main() {
  const auto q = [](TokenSpan s, TokenSpan o, TokenSpan p, ComparisonLabel l) {
    return Quintuple{{s, o, std::nullopt, p}, l};
  };
  Dataset d;
  d.sentences = {
      make_sentence("1", "Pixel tốt hơn Galaxy", {q({0, 0}, {3, 3}, {1, 2}, ComparisonLabel::kComPlus)}),
      make_sentence("2", "Nokia kém hơn Oppo", {q({0, 0}, {3, 3}, {1, 2}, ComparisonLabel::kComMinus)}),
      make_sentence("3", "Vivo ngang với Xiaomi", {q({0, 0}, {3, 3}, {1, 2}, ComparisonLabel::kEql)}),
      make_sentence("4", "mình vừa mua máy mới"),
      make_sentence("5", "shop giao hàng nhanh"),
  };

  TrainConfig config;
  config.learning_rate = 1e-2;  // the linear baseline needs a larger step
  config.hash_dim = 1u << 12;

  PipelineBackends backends;
  backends.stage1 = train_native(Task::kSentence, d, config).backend();
  backends.stage2 = {train_native(Task::kTag, d, config).backend()};
  backends.stage3 = train_native(Task::kQuadruple, d, config).backend();

  PipelineConfig pipeline;
  pipeline.stage1_mode = Stage1Mode::kBinary;
  const PipelineResult result = run_pipeline(d, pipeline, backends);

  std::cout << dataset_to_string(result.predictions) << '\n'
            << eval_report_to_text(e_t5_macro(d, result.predictions));
  return 0;
}
