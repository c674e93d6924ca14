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

#include "lcshap/external_model.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "lcshap/errors.h"
#include "lcshap/models.h"

using namespace lcshap;

namespace {

ExternalModelEndpoint host(const std::string& args) {
  ExternalModelEndpoint e;
  e.transport = Transport::kSubprocess;
  e.address = std::string(LCSHAP_MODEL_HOST) + " " + args;
  return e;
}

ExternalModelEndpoint shell(const std::string& script) {
  ExternalModelEndpoint e;
  e.transport = Transport::kSubprocess;
  e.address = script;
  e.timeout = std::chrono::milliseconds(300);
  e.backoff = std::chrono::milliseconds(1);
  return e;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  auto tcp = parse_endpoint("tcp 127.0.0.1:9000");
  CHECK(tcp.transport == Transport::kTcp);
  CHECK(tcp.address == "127.0.0.1:9000");
  CHECK(parse_endpoint("tcp:localhost:1").transport == Transport::kTcp);
  auto cmd = parse_endpoint("cmd python3 serve.py");
  CHECK(cmd.transport == Transport::kSubprocess);
  CHECK(cmd.address == "python3 serve.py");
  CHECK(parse_endpoint("./serve --flag").address == "./serve --flag");
  CHECK_THROWS_AS(parse_endpoint(""), ConfigurationError);
}

TEST_CASE("uniform host returns -log C") {
  auto model = external_model(host("--model uniform --classes 3"));
  CHECK(model->num_classes() == 3);
  const std::vector<std::vector<double>> in{{1, 2}, {0, 0}, {5, 5}};
  for (const auto& row : model->evaluate_batch(in)) {
    for (double lp : row) CHECK(lp == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  }
  auto v = make_plugin_value_function(*model, Instance{{1, 2}, {0, 0}}, ScoreMode::kExpectedLogProb);
  for (std::uint64_t m = 0; m < 4; ++m) {
    CHECK(v.value(FeatureSubset::from_mask(2, m)) == doctest::Approx(-std::log(3.0)));
  }
}

TEST_CASE("naive Bayes over a subprocess matches the in-process model") {
  ExternalModelEndpoint e = host("--model nb --seed 0");
  e.batch_size = 64;
  auto remote = external_model(e);
  BuiltinModelOptions opts;
  auto local = make_builtin_model("nb", opts);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> token(0, 119);
  std::vector<std::vector<double>> in(1000, std::vector<double>(40));
  for (auto& row : in) {
    for (double& t : row) t = token(rng);
  }
  const auto a = remote->evaluate_batch(in);
  const auto b = local->evaluate_batch(in);
  REQUIRE(a.size() == 1000);
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t y = 0; y < 2; ++y) worst = std::max(worst, std::abs(a[r][y] - b[r][y]));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("tcp transport") {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  REQUIRE(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  REQUIRE(::listen(listener, 1) == 0);
  socklen_t len = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);

  UniformModel served(4);
  std::thread server([&] {
    const int conn = ::accept(listener, nullptr, nullptr);
    auto channel = fd_channel(conn, conn, true);
    serve_model(served, *channel);
  });
  {
    auto model = external_model(parse_endpoint("tcp 127.0.0.1:" + std::to_string(port)));
    const std::vector<std::vector<double>> in{{0.5}};
    CHECK(model->evaluate_batch(in)[0][2] == doctest::Approx(-std::log(4.0)));
  }
  server.join();
  ::close(listener);
}

TEST_CASE("dead endpoint fails after retries") {
  auto e = shell("sleep 5");
  e.timeout = std::chrono::milliseconds(100);
  const auto start = std::chrono::steady_clock::now();
  try {
    external_model(e);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& err) {
    CHECK(std::string(err.what()).find("3 retries") != std::string::npos);
  }
  CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(400));

  // Unused port on loopback: connection refused on every attempt.
  ExternalModelEndpoint refused;
  refused.transport = Transport::kTcp;
  refused.address = "127.0.0.1:1";
  refused.backoff = std::chrono::milliseconds(1);
  CHECK_THROWS_AS(external_model(refused), EvaluationError);
}

TEST_CASE("timeout mid-session carries the batch indices") {
  // Answers the handshake, then goes silent.
  auto e = shell(R"(read l; echo '{"op":"hello","num_classes":2}'; sleep 5)");
  e.batch_size = 2;
  e.max_retries = 1;
  auto model = external_model(e);
  const std::vector<std::vector<double>> in{{1}, {2}, {3}};
  try {
    model->evaluate_batch(in);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& err) {
    CHECK(err.indices() == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("malformed replies raise protocol errors") {
  auto garbage = shell(R"(read l; echo '{"op":"hello","num_classes":2}'; read l; echo 'not json')");
  auto model = external_model(garbage);
  const std::vector<std::vector<double>> in{{1}};
  try {
    model->evaluate_batch(in);
    FAIL("expected a protocol error");
  } catch (const ProtocolError& err) {
    CHECK(err.line() == "not json");
  }

  auto wrong_shape = shell(
      R"(read l; echo '{"op":"hello","num_classes":2}'; read l; echo '{"op":"eval","id":1,"log_probs":[[0.0]]}')");
  auto m2 = external_model(wrong_shape);
  CHECK_THROWS_AS(m2->evaluate_batch(in), ProtocolError);

  auto mismatch = shell(R"(read l; echo '{"op":"hello","num_classes":5}')");
  mismatch.num_classes = 2;
  CHECK_THROWS_AS(external_model(mismatch), ProtocolError);
}
