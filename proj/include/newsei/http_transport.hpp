// Copyright 2026 The newsei Authors.
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

#pragma once

// Kept apart from providers.hpp so only binaries that talk to the network
// pull in cpp-httplib (and OpenSSL when CPPHTTPLIB_OPENSSL_SUPPORT is set).

#include <string>

#include "httplib.h"
#include "newsei/providers.hpp"

namespace newsei {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    // Split "scheme://host[:port]/path" into client base and path.
    const std::size_t scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) return {HttpResponse::Outcome::ConnectionError, 0, "bad url"};
    const std::size_t path_start = request.url.find('/', scheme_end + 3);
    const std::string base = request.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout).count();
    client.set_connection_timeout(static_cast<time_t>(secs));
    client.set_read_timeout(static_cast<time_t>(secs));
    client.set_write_timeout(static_cast<time_t>(secs));

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    auto result = client.Post(path, headers, request.body, content_type);
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write ||
          err == httplib::Error::ConnectionTimeout) {
        return {HttpResponse::Outcome::Timeout, 0, httplib::to_string(err)};
      }
      return {HttpResponse::Outcome::ConnectionError, 0, httplib::to_string(err)};
    }
    return {HttpResponse::Outcome::Ok, result->status, result->body};
  }
};

}  // namespace newsei
