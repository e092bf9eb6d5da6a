// Copyright 2026 The TensiForge Authors
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

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tensiforge/actuation.hpp"
#include "tensiforge/physics.hpp"

namespace tensiforge::cli {

// Exit codes of the command line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitController = 4;
inline constexpr int kExitDevice = 5;

// Runs one command. `args` excludes the program name. Results go to `out`,
// diagnostics to `err`; returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Applies TENSIFORGE_LOG (error, info or debug) to a stderr logger.
void configure_logging();

nlohmann::json report_to_json(const physics::EquilibriumReport& report);
nlohmann::json trace_to_json(const actuation::SegmentCommand& target,
                             const std::vector<actuation::TraceEntry>& trace, bool converged);

}  // namespace tensiforge::cli
