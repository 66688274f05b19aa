/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * This file is part of psvclab, a supply-voltage side-channel laboratory.
 */

#pragma once

#include "psvc/aes.hpp"
#include "psvc/cpa.hpp"
#include "psvc/dsp.hpp"
#include "psvc/errors.hpp"
#include "psvc/leakdown.hpp"
#include "psvc/rng.hpp"
#include "psvc/sim.hpp"
#include "psvc/trace_set.hpp"
#include "psvc/traceio.hpp"
