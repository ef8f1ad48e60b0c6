// Copyright 2026 The sparse_ldp Authors
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

#include "sparse_ldp/accountant.hpp"
#include "sparse_ldp/aggregate.hpp"
#include "sparse_ldp/baselines.hpp"
#include "sparse_ldp/coco.hpp"
#include "sparse_ldp/collision.hpp"
#include "sparse_ldp/error.hpp"
#include "sparse_ldp/experiment.hpp"
#include "sparse_ldp/hash.hpp"
#include "sparse_ldp/mechanism.hpp"
#include "sparse_ldp/oracle.hpp"
#include "sparse_ldp/rng.hpp"
#include "sparse_ldp/vector.hpp"
