//
// Copyright 2026 The RAPID Authors
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
//
#ifndef RAPID_RAPID_HPP_
#define RAPID_RAPID_HPP_

#include "rapid/attribution.hpp"
#include "rapid/calibration.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/attacker.hpp"
#include "rapid/risk.hpp"
#include "rapid/simgen.hpp"
#include "rapid/synthesizer.hpp"
#include "rapid/uncertainty.hpp"

#endif  // RAPID_RAPID_HPP_
