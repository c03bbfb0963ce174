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

#include "vad/http.hpp"

#include "httplib.h"
#include "vad/error.hpp"

namespace vad {

namespace {

httplib::Client MakeClient(const std::string& endpoint, int timeout_ms) {
  httplib::Client client(endpoint);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  return client;
}

}  // namespace

nlohmann::json HttpPostJson(const std::string& endpoint, const std::string& route,
                            const nlohmann::json& body, int timeout_ms) {
  auto client = MakeClient(endpoint, timeout_ms);
  auto res = client.Post(route, body.dump(), "application/json");
  if (!res) {
    Fail(ErrorKind::kBackendFailure,
         "POST " + endpoint + route + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    Fail(ErrorKind::kBackendFailure,
         "POST " + endpoint + route + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kBackendFailure, "POST " + endpoint + route + ": bad JSON: " + e.what());
  }
}

bool HttpGetOk(const std::string& endpoint, const std::string& route, int timeout_ms) {
  try {
    auto client = MakeClient(endpoint, timeout_ms);
    auto res = client.Get(route);
    return res && res->status == 200;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace vad
