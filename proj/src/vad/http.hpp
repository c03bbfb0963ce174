// Copyright 2026 The vadclip Authors
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

#ifndef VADCLIP_VAD_HTTP_HPP_
#define VADCLIP_VAD_HTTP_HPP_

#include <string>

#include "json.hpp"

namespace vad {

// Minimal JSON-over-HTTP helpers. Failures throw vad::Error(kBackendFailure)
// with the transport or status detail.
nlohmann::json HttpPostJson(const std::string& endpoint, const std::string& route,
                            const nlohmann::json& body, int timeout_ms);

bool HttpGetOk(const std::string& endpoint, const std::string& route, int timeout_ms);

}  // namespace vad

#endif  // VADCLIP_VAD_HTTP_HPP_
