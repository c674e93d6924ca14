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

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

using Clock = std::chrono::steady_clock;

// A failure worth retrying on a fresh connection.
class TransientError : public Error {
 public:
  using Error::Error;
};

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owned)
      : read_fd_(read_fd), write_fd_(write_fd), owned_(owned) {}

  ~FdChannel() override { close_fds(); }

  void write_line(const std::string& line) override {
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransientError(std::string("write failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    while (true) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransientError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) return std::nullopt;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransientError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransientError("connection closed by peer");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (!owned_) return;
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  bool owned_;
  std::string buffer_;
};

class SubprocessChannel : public FdChannel {
 public:
  SubprocessChannel(int read_fd, int write_fd, pid_t pid) : FdChannel(read_fd, write_fd, true), pid_(pid) {}

  ~SubprocessChannel() override {
    close_fds();
    // Give the child a moment to exit on EOF before killing it.
    for (int attempt = 0; attempt < 20; ++attempt) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

std::unique_ptr<LineChannel> spawn(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw TransientError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransientError("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw TransientError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  return std::make_unique<SubprocessChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> dial(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw ConfigurationError("tcp address must look like host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &found) != 0) {
    throw TransientError("cannot resolve " + address);
  }
  int fd = -1;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw TransientError("cannot connect to " + address);
  return std::make_unique<FdChannel>(fd, fd, true);
}

std::vector<std::vector<double>> parse_log_probs(const nlohmann::json& reply,
                                                 const std::string& line, std::size_t rows,
                                                 std::size_t classes) {
  const auto it = reply.find("log_probs");
  if (it == reply.end() || !it->is_array() || it->size() != rows) {
    throw ProtocolError("reply must carry one log_probs row per instance", line);
  }
  std::vector<std::vector<double>> out;
  out.reserve(rows);
  for (const auto& row : *it) {
    if (!row.is_array() || row.size() != classes) {
      throw ProtocolError("log_probs row has the wrong number of classes", line);
    }
    std::vector<double> values;
    values.reserve(classes);
    for (const auto& v : row) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw ProtocolError("log_probs must be finite numbers", line);
      }
      values.push_back(v.get<double>());
    }
    out.push_back(std::move(values));
  }
  return out;
}

nlohmann::json parse_line(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ProtocolError("reply is not a JSON object", line);
    return j;
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("reply is not valid JSON", line);
  }
}

}  // namespace

std::unique_ptr<LineChannel> open_channel(const ExternalModelEndpoint& endpoint) {
  ignore_sigpipe();
  return endpoint.transport == Transport::kSubprocess ? spawn(endpoint.address)
                                                      : dial(endpoint.address);
}

std::unique_ptr<LineChannel> fd_channel(int read_fd, int write_fd, bool owned) {
  ignore_sigpipe();
  return std::make_unique<FdChannel>(read_fd, write_fd, owned);
}

ExternalModel::ExternalModel(ExternalModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.batch_size == 0) throw ConfigurationError("batch size must be positive");
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(endpoint_.backoff * (1 << (attempt - 1)));
    try {
      connect();
      return;
    } catch (const TransientError& e) {
      channel_.reset();
      last_error = e.what();
    }
  }
  throw EvaluationError("external model handshake failed after " +
                            std::to_string(endpoint_.max_retries) + " retries: " + last_error,
                        {});
}

ExternalModel::~ExternalModel() {
  if (!channel_) return;
  try {
    channel_->write_line(R"({"op":"bye"})");
  } catch (const std::exception&) {
  }
}

void ExternalModel::connect() {
  channel_ = open_channel(endpoint_);
  channel_->write_line(nlohmann::json{{"op", "hello"}, {"version", 1}}.dump());
  const auto line = channel_->read_line(endpoint_.timeout);
  if (!line) throw TransientError("handshake timed out");
  const auto reply = parse_line(*line);
  if (reply.value("op", "") != "hello") throw ProtocolError("expected a hello reply", *line);
  const auto it = reply.find("num_classes");
  if (it == reply.end() || !it->is_number_unsigned() || it->get<std::size_t>() == 0) {
    throw ProtocolError("hello reply needs a positive num_classes", *line);
  }
  const auto classes = it->get<std::size_t>();
  if (endpoint_.num_classes != 0 && classes != endpoint_.num_classes) {
    throw ProtocolError("endpoint reports " + std::to_string(classes) + " classes, expected " +
                            std::to_string(endpoint_.num_classes),
                        *line);
  }
  if (num_classes_ != 0 && classes != num_classes_) {
    throw ProtocolError("endpoint changed its class count on reconnect", *line);
  }
  num_classes_ = classes;
}

std::vector<std::vector<double>> ExternalModel::exchange(
    std::span<const std::vector<double>> inputs) {
  const std::uint64_t id = next_id_++;
  nlohmann::json request{{"op", "eval"}, {"id", id}, {"instances", nlohmann::json::array()}};
  for (const auto& row : inputs) request["instances"].push_back(row);
  channel_->write_line(request.dump());
  const auto line = channel_->read_line(endpoint_.timeout);
  if (!line) throw TransientError("timed out waiting for eval reply");
  const auto reply = parse_line(*line);
  if (reply.value("op", "") != "eval") throw ProtocolError("expected an eval reply", *line);
  const auto rid = reply.find("id");
  if (rid == reply.end() || !rid->is_number_unsigned() || rid->get<std::uint64_t>() != id) {
    throw ProtocolError("reply id does not match request id " + std::to_string(id), *line);
  }
  return parse_log_probs(reply, *line, inputs.size(), num_classes_);
}

std::vector<std::vector<double>> ExternalModel::evaluate_batch(
    std::span<const std::vector<double>> inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += endpoint_.batch_size) {
    const std::size_t n = std::min(endpoint_.batch_size, inputs.size() - start);
    const auto chunk = inputs.subspan(start, n);
    std::string last_error;
    bool done = false;
    for (std::size_t attempt = 0; attempt <= endpoint_.max_retries && !done; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(endpoint_.backoff * (1 << (attempt - 1)));
      try {
        if (!channel_) connect();
        auto rows = exchange(chunk);
        for (auto& r : rows) out.push_back(std::move(r));
        done = true;
      } catch (const TransientError& e) {
        channel_.reset();
        last_error = e.what();
      }
    }
    if (!done) {
      std::vector<std::size_t> indices(n);
      std::iota(indices.begin(), indices.end(), start);
      throw EvaluationError("external model failed after " +
                                std::to_string(endpoint_.max_retries) + " retries: " + last_error,
                            std::move(indices));
    }
  }
  return out;
}

std::unique_ptr<Model> external_model(const ExternalModelEndpoint& endpoint) {
  return std::make_unique<ExternalModel>(endpoint);
}

ExternalModelEndpoint parse_endpoint(const std::string& spec) {
  ExternalModelEndpoint endpoint;
  auto starts = [&](const std::string& p) { return spec.rfind(p, 0) == 0; };
  if (starts("tcp ") || starts("tcp:")) {
    endpoint.transport = Transport::kTcp;
    endpoint.address = spec.substr(4);
  } else if (starts("cmd ") || starts("cmd:")) {
    endpoint.address = spec.substr(4);
  } else {
    endpoint.address = spec;
  }
  if (endpoint.address.empty()) throw ConfigurationError("empty external model address");
  return endpoint;
}

void serve_model(Model& model, LineChannel& channel) {
  while (true) {
    std::optional<std::string> line;
    try {
      line = channel.read_line(std::chrono::hours(24));
    } catch (const Error&) {
      return;
    }
    if (!line) continue;
    if (line->empty()) continue;
    nlohmann::json reply;
    try {
      const auto request = nlohmann::json::parse(*line);
      const std::string op = request.value("op", "");
      if (op == "bye") return;
      if (op == "hello") {
        reply = {{"op", "hello"}, {"num_classes", model.num_classes()}};
      } else if (op == "eval") {
        const auto rows = request.at("instances").get<std::vector<std::vector<double>>>();
        reply = {{"op", "eval"},
                 {"id", request.at("id")},
                 {"log_probs", model.evaluate_batch(rows)}};
      } else {
        reply = {{"op", "error"}, {"message", "unknown op '" + op + "'"}};
      }
    } catch (const std::exception& e) {
      reply = {{"op", "error"}, {"message", e.what()}};
    }
    try {
      channel.write_line(reply.dump());
    } catch (const Error&) {
      return;
    }
  }
}

}  // namespace lcshap
