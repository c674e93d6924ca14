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

// Black-box models behind a newline-delimited JSON protocol:
//
//   -> {"op":"hello","version":1}        <- {"op":"hello","num_classes":C}
//   -> {"op":"eval","id":n,"instances":[[...],...]}
//                                         <- {"op":"eval","id":n,"log_probs":[[...],...]}
//   -> {"op":"bye"}
//
// over a child process's stdin/stdout or a TCP connection.

#ifndef LCSHAP_EXTERNAL_MODEL_H_
#define LCSHAP_EXTERNAL_MODEL_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "lcshap/valuation.h"

namespace lcshap {

enum class Transport { kSubprocess, kTcp };

struct ExternalModelEndpoint {
  Transport transport = Transport::kSubprocess;
  // A shell command line for kSubprocess, "host:port" for kTcp.
  std::string address;
  // Expected class count; 0 accepts whatever the handshake reports.
  std::size_t num_classes = 0;
  std::chrono::milliseconds timeout{10000};
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{50};
  std::size_t batch_size = kDefaultBatchSize;
};

// A bidirectional line stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // Returns nullopt on timeout; throws on a closed stream.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<LineChannel> open_channel(const ExternalModelEndpoint& endpoint);
// Wraps already-open descriptors; closes them on destruction when `owned`.
std::unique_ptr<LineChannel> fd_channel(int read_fd, int write_fd, bool owned);

// Connection failures and timeouts are retried with exponential backoff on a
// fresh connection; after `max_retries` retries the batch fails with an
// EvaluationError listing its instance indices. Malformed replies raise
// ProtocolError immediately.
class ExternalModel : public Model {
 public:
  explicit ExternalModel(ExternalModelEndpoint endpoint);
  ~ExternalModel() override;

  std::size_t num_classes() const override { return num_classes_; }
  std::vector<std::vector<double>> evaluate_batch(
      std::span<const std::vector<double>> inputs) override;

 private:
  void connect();
  std::vector<std::vector<double>> exchange(std::span<const std::vector<double>> inputs);

  ExternalModelEndpoint endpoint_;
  std::unique_ptr<LineChannel> channel_;
  std::size_t num_classes_ = 0;
  std::uint64_t next_id_ = 1;
};

std::unique_ptr<Model> external_model(const ExternalModelEndpoint& endpoint);

// Parses "external:<command>" or "external:tcp <host:port>" style strings
// into an endpoint; `spec` is the part after "external:".
ExternalModelEndpoint parse_endpoint(const std::string& spec);

// Answers protocol requests from `channel` with `model` until "bye" or end of
// stream. Used by the model host tool and by tests.
void serve_model(Model& model, LineChannel& channel);

}  // namespace lcshap

#endif  // LCSHAP_EXTERNAL_MODEL_H_
