// Copyright 2026 The dsattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dsattn/attention.hpp"
#include "dsattn/birkhoff.hpp"
#include "dsattn/core.hpp"
#include "dsattn/counting.hpp"
#include "dsattn/expressivity.hpp"
#include "dsattn/gradcheck.hpp"
#include "dsattn/io.hpp"
#include "dsattn/operators.hpp"
#include "dsattn/parallel.hpp"
#include "dsattn/qontot.hpp"
#include "dsattn/qr_dsm.hpp"
#include "dsattn/sinkhorn.hpp"
