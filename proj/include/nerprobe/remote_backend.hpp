// Copyright 2026 The nerprobe Authors.
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

#ifndef NERPROBE_REMOTE_BACKEND_HPP_
#define NERPROBE_REMOTE_BACKEND_HPP_

#include <chrono>
#include <string>

#include "json.hpp"
#include "nerprobe/lm_backend.hpp"

namespace nerprobe {

// Client for a scoring service speaking the JSON wire protocol:
//
//   GET  /descriptor -> {name, vocab_size, unknown_token: {id, text}, max_context}
//   POST /tokenize   {text, prefix_with_unknown} -> {token_ids, token_texts, word_spans}
//   POST /score      {token_ids} -> {logprobs}
//   POST /generate   {token_ids, max_new_tokens, stop_on_newline}
//                    -> {text, first_token_logprobs}
//   POST /detokenize {token_ids} -> {text}
//
// All probabilities travel as natural logs. `word_spans` is a list of
// inclusive [start, end] pairs. /detokenize is only called when calibration
// picks a first token other than the greedy one.
//
// HTTP 413 maps to kContextOverflow and 422 to kProtocol. Connection
// failures and 5xx responses are retried; when attempts run out a
// TransportError names the endpoint and the attempt count.
//
// Scoring determinism is whatever the server guarantees; the client adds no
// caching.
struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds retry_backoff{200};
};

class RemoteLm final : public LanguageModel {
 public:
  // Fetches the descriptor; throws TransportError if the service is down.
  explicit RemoteLm(std::string base_url, RemoteOptions options = {});

  LmDescriptor descriptor() const override { return descriptor_; }
  TokenizedSequence tokenize(std::string_view text, bool prefix_with_unknown) const override;
  TokenizedSequence score(TokenizedSequence seq) const override;
  Generation generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                      bool stop_on_newline) const override;
  std::string decode(std::span<const int> ids) const override;

  const std::string& base_url() const { return base_url_; }

 private:
  nlohmann::json call(const std::string& method, const std::string& path,
                      const nlohmann::json* body) const;

  std::string base_url_;
  RemoteOptions options_;
  LmDescriptor descriptor_;
};

LmDescriptor descriptor_from_json(const nlohmann::json& j);
nlohmann::json descriptor_to_json(const LmDescriptor& d);

// Builds a TokenizedSequence from a /tokenize response and checks its
// invariants (kProtocol on violation).
TokenizedSequence sequence_from_tokenize_response(const nlohmann::json& j, bool prefix_with_unknown);

}  // namespace nerprobe

#endif  // NERPROBE_REMOTE_BACKEND_HPP_
