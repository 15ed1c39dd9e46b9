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

// Umbrella header.

#pragma once

#include "comom/augment.hpp"
#include "comom/backend.hpp"
#include "comom/core.hpp"
#include "comom/ensemble.hpp"
#include "comom/error.hpp"
#include "comom/eval.hpp"
#include "comom/experiment.hpp"
#include "comom/external.hpp"
#include "comom/features.hpp"
#include "comom/ingest.hpp"
#include "comom/model.hpp"
#include "comom/native.hpp"
#include "comom/pipeline.hpp"
#include "comom/random.hpp"
#include "comom/spans.hpp"
#include "comom/utf8.hpp"

namespace comom {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace comom
