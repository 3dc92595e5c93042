/*
 * Copyright 2026 The NRTO Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NRTO_ARTIFACT_HPP
#define NRTO_ARTIFACT_HPP

#include "nrto/outer.hpp"
#include "nrto/validate.hpp"

#include <iosfwd>
#include <string>

namespace nrto {

/// run.json. Doubles are written in shortest round-trip form; non-finite
/// values are stored as the strings "inf", "-inf" and "nan".
void write_run_json(std::ostream& os, const RunArtifact& artifact);
RunArtifact read_run_json(std::istream& is, const std::string& source);
RunArtifact load_run_json(const std::string& path);

/// k,x0..x{n_x-1},u0..u{n_u-1}; the row k = T has empty control cells.
void write_trajectory_csv(std::ostream& os, const StackedTrajectory& nominal);
/// k,kv0..kv{n_u n_x - 1}, column-major vec(K_k).
void write_gains_csv(std::ostream& os, const AffinePolicy& policy);
/// id,kind,success,worst_margin,xT0..
void write_rollouts_csv(std::ostream& os, const ValidationReport& report);
/// Rates and counts of a validation run.
void write_metrics_json(std::ostream& os, const ValidationReport& report);

}  // namespace nrto

#endif  // NRTO_ARTIFACT_HPP
