// Copyright 2026 The lcshap Authors.
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

// Serves a built-in model over the newline-JSON protocol on stdin/stdout, or
// on a TCP port with --port.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <iostream>

#include "CLI11.hpp"
#include "lcshap/external_model.h"
#include "lcshap/models.h"

int main(int argc, char** argv) {
  CLI::App app{"Serve a built-in model over the line protocol"};
  std::string name = "nb";
  lcshap::BuiltinModelOptions options;
  int port = 0;
  app.add_option("--model", name, "nb | markov | uniform")->capture_default_str();
  app.add_option("--seed", options.seed)->capture_default_str();
  app.add_option("--d", options.d, "features of the markov model")->capture_default_str();
  app.add_option("--classes", options.num_classes)->capture_default_str();
  app.add_option("--mixing", options.mixing)->capture_default_str();
  app.add_option("--port", port, "listen on 127.0.0.1:PORT instead of stdio");
  CLI11_PARSE(app, argc, argv);

  try {
    auto model = lcshap::make_builtin_model(name, options);
    if (port == 0) {
      auto channel = lcshap::fd_channel(STDIN_FILENO, STDOUT_FILENO, false);
      lcshap::serve_model(*model, *channel);
      return 0;
    }
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    const int yes = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, 4) != 0) {
      std::cerr << "error: cannot listen on port " << port << "\n";
      return 2;
    }
    while (true) {
      const int conn = ::accept(listener, nullptr, nullptr);
      if (conn < 0) continue;
      auto channel = lcshap::fd_channel(conn, conn, true);
      lcshap::serve_model(*model, *channel);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
