/*
 * Copyright 2026 The migsim Authors
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
 */

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "migsim/core.hpp"

namespace testutil {

inline migsim::ContainerProfile averaged_profile(double memory_mb, double rate, double dirty,
                                                 double delay, double handoff = 0.0,
                                                 std::string id = "c0") {
  migsim::ContainerProfile p;
  p.id = std::move(id);
  p.memory_mb = memory_mb;
  p.handoff_rate_mbps = handoff > 0.0 ? handoff : rate;
  p.params = migsim::AveragedParams{rate, dirty, delay};
  return p;
}

inline migsim::ContainerProfile traced_profile(double memory_mb, std::vector<double> rates,
                                               std::vector<double> dirties,
                                               std::vector<double> gaps, double handoff,
                                               std::string id = "c0") {
  migsim::RateTrace trace;
  for (std::size_t i = 0; i < rates.size(); ++i)
    trace.events.push_back(migsim::TraceEvent{rates[i], dirties[i], gaps[i]});
  migsim::ContainerProfile p;
  p.id = std::move(id);
  p.memory_mb = memory_mb;
  p.handoff_rate_mbps = handoff;
  p.params = std::move(trace);
  return p;
}

}  // namespace testutil
