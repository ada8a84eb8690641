// Copyright 2026 The newsei Authors.
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

#pragma once

#include "newsei/config.hpp"
#include "newsei/corpus.hpp"
#include "newsei/datastore.hpp"
#include "newsei/date.hpp"
#include "newsei/error.hpp"
#include "newsei/eval.hpp"
#include "newsei/graph.hpp"
#include "newsei/mock_llm.hpp"
#include "newsei/parallel.hpp"
#include "newsei/pipeline.hpp"
#include "newsei/providers.hpp"
#include "newsei/qa.hpp"
#include "newsei/querylog.hpp"
#include "newsei/text.hpp"
