// Copyright 2026 The PrivRecourse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "privrecourse/data.hpp"
#include "privrecourse/density.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/graph.hpp"
#include "privrecourse/kmeans.hpp"
#include "privrecourse/metrics.hpp"
#include "privrecourse/model.hpp"
#include "privrecourse/pipeline.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/privacy.hpp"
#include "privrecourse/publish.hpp"
#include "privrecourse/random.hpp"
#include "privrecourse/recourse.hpp"
