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

#include "nerprobe/remote_backend.hpp"

#include <cmath>
#include <thread>

#include "httplib.h"

namespace nerprobe {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix without trailing '/'
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::kConfig, "backend url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

std::vector<int> ids_of(const TokenizedSequence& seq) { return seq.ids(); }

}  // namespace

LmDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    LmDescriptor d;
    d.name = j.at("name").get<std::string>();
    d.vocab_size = j.at("vocab_size").get<std::size_t>();
    d.unknown_token.id = j.at("unknown_token").at("id").get<int>();
    d.unknown_token.text = j.at("unknown_token").at("text").get<std::string>();
    d.max_context = j.at("max_context").get<std::size_t>();
    check_descriptor(d);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed descriptor: ") + e.what());
  }
}

nlohmann::json descriptor_to_json(const LmDescriptor& d) {
  return {{"name", d.name},
          {"vocab_size", d.vocab_size},
          {"unknown_token", {{"id", d.unknown_token.id}, {"text", d.unknown_token.text}}},
          {"max_context", d.max_context}};
}

TokenizedSequence sequence_from_tokenize_response(const nlohmann::json& j, bool prefix_with_unknown) {
  TokenizedSequence seq;
  try {
    const auto ids = j.at("token_ids").get<std::vector<int>>();
    const auto texts = j.at("token_texts").get<std::vector<std::string>>();
    if (ids.size() != texts.size()) {
      throw Error(ErrorKind::kProtocol, "tokenize response: token_ids and token_texts differ in length");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) seq.tokens.push_back(Token{ids[i], texts[i]});
    for (const auto& span : j.at("word_spans")) {
      const auto pair = span.get<std::vector<std::size_t>>();
      if (pair.size() != 2) throw Error(ErrorKind::kProtocol, "tokenize response: word span is not a pair");
      seq.word_spans.push_back(WordSpan{pair[0], pair[1]});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed tokenize response: ") + e.what());
  }
  if (seq.tokens.empty()) throw Error(ErrorKind::kEmptyInput, "tokenize: text produced no tokens");
  seq.has_unknown_prefix = prefix_with_unknown;
  seq.transition_indices = transitions_from_spans(seq.word_spans);
  try {
    check_sequence_invariants(seq);
  } catch (const Error& e) {
    throw Error(ErrorKind::kProtocol, std::string("tokenize response: ") + e.what());
  }
  return seq;
}

RemoteLm::RemoteLm(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  if (options_.max_attempts < 1) options_.max_attempts = 1;
  descriptor_ = descriptor_from_json(call("GET", "/descriptor", nullptr));
}

nlohmann::json RemoteLm::call(const std::string& method, const std::string& path,
                              const nlohmann::json* body) const {
  const SplitUrl url = split_url(base_url_);
  const std::string endpoint = method + " " + base_url_ + path;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options_.retry_backoff * (attempt - 1));
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Result res = method == "GET"
                              ? client.Get(url.prefix + path)
                              : client.Post(url.prefix + path, body ? body->dump() : "{}", "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kProtocol, endpoint + ": response is not JSON: " + e.what());
      }
    }
    if (status == 413) throw Error(ErrorKind::kContextOverflow, endpoint + ": context overflow (413) " + res->body);
    if (status >= 500) {
      last_error = "HTTP " + std::to_string(status) + " " + res->body;
      continue;
    }
    throw Error(ErrorKind::kProtocol, endpoint + ": HTTP " + std::to_string(status) + " " + res->body);
  }
  throw TransportError(endpoint, options_.max_attempts, last_error);
}

TokenizedSequence RemoteLm::tokenize(std::string_view text, bool prefix_with_unknown) const {
  if (trim(text).empty()) throw Error(ErrorKind::kEmptyInput, "tokenize: empty text");
  const nlohmann::json body = {{"text", std::string(text)}, {"prefix_with_unknown", prefix_with_unknown}};
  return sequence_from_tokenize_response(call("POST", "/tokenize", &body), prefix_with_unknown);
}

TokenizedSequence RemoteLm::score(TokenizedSequence seq) const {
  if (seq.tokens.empty()) throw Error(ErrorKind::kEmptyInput, "score: empty sequence");
  if (seq.tokens.size() > descriptor_.max_context) {
    throw Error(ErrorKind::kContextOverflow, "score: sequence exceeds max_context " +
                                                 std::to_string(descriptor_.max_context));
  }
  const nlohmann::json body = {{"token_ids", ids_of(seq)}};
  const auto res = call("POST", "/score", &body);
  try {
    seq.logprobs = res.at("logprobs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed score response: ") + e.what());
  }
  if (seq.logprobs.size() != seq.tokens.size()) {
    throw Error(ErrorKind::kProtocol, "score response: expected " + std::to_string(seq.tokens.size()) +
                                          " logprobs, got " + std::to_string(seq.logprobs.size()));
  }
  for (double& lp : seq.logprobs) {
    if (lp > 0.0) {
      if (lp > 1e-9) throw Error(ErrorKind::kProtocol, "score response: positive logprob");
      lp = 0.0;  // rounding noise from the server
    }
  }
  return seq;
}

Generation RemoteLm::generate(const TokenizedSequence& prompt, std::size_t max_new_tokens,
                              bool stop_on_newline) const {
  if (max_new_tokens == 0) throw Error(ErrorKind::kPrecondition, "generate: max_new_tokens must be >= 1");
  if (prompt.tokens.size() + max_new_tokens > descriptor_.max_context) {
    throw Error(ErrorKind::kContextOverflow, "generate: prompt plus new tokens exceeds max_context " +
                                                 std::to_string(descriptor_.max_context));
  }
  const nlohmann::json body = {{"token_ids", ids_of(prompt)},
                               {"max_new_tokens", max_new_tokens},
                               {"stop_on_newline", stop_on_newline}};
  const auto res = call("POST", "/generate", &body);
  Generation out;
  std::vector<double> logprobs;
  try {
    out.text = res.at("text").get<std::string>();
    logprobs = res.at("first_token_logprobs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed generate response: ") + e.what());
  }
  if (logprobs.size() != descriptor_.vocab_size) {
    throw Error(ErrorKind::kProtocol, "generate response: first_token_logprobs has " +
                                          std::to_string(logprobs.size()) + " entries, vocab_size is " +
                                          std::to_string(descriptor_.vocab_size));
  }
  out.first_token_distribution = Eigen::Map<const Eigen::VectorXd>(logprobs.data(), logprobs.size())
                                     .array()
                                     .exp()
                                     .matrix();
  const double total = out.first_token_distribution.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::kProtocol, "generate response: distribution has no mass");
  out.first_token_distribution /= total;
  if (stop_on_newline) {
    if (auto nl = out.text.find('\n'); nl != std::string::npos) out.text.resize(nl);
  }
  return out;
}

std::string RemoteLm::decode(std::span<const int> ids) const {
  const nlohmann::json body = {{"token_ids", std::vector<int>(ids.begin(), ids.end())}};
  const auto res = call("POST", "/detokenize", &body);
  try {
    return res.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed detokenize response: ") + e.what());
  }
}

}  // namespace nerprobe
