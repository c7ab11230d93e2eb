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

#ifndef NERPROBE_COMMON_HPP_
#define NERPROBE_COMMON_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace nerprobe {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind {
  kEmptyInput,
  kContextOverflow,
  kTransport,
  kZeroProbability,
  kDimensionMismatch,
  kInsufficientExamples,
  kParse,
  kConfig,
  kPrecondition,
  kUnscored,
  kProtocol,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this exception type; `kind()`
// lets callers (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class TransportError : public Error {
 public:
  TransportError(std::string endpoint, int attempts, const std::string& detail);
  const std::string& endpoint() const noexcept { return endpoint_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string endpoint_;
  int attempts_;
};

// ---------------------------------------------------------------------------
// Entity types
// ---------------------------------------------------------------------------

enum class NeType {
  kPerson,
  kLocation,
  kOrganisation,
  kCorporation,
  kGroup,
  kProduct,
  kCreativeWork,
};

inline constexpr NeType kAllNeTypes[] = {
    NeType::kPerson,      NeType::kLocation, NeType::kOrganisation,
    NeType::kCorporation, NeType::kGroup,    NeType::kProduct,
    NeType::kCreativeWork,
};

// Lowercase display name, e.g. "creative work". This is also the NER prompt
// label.
std::string_view to_string(NeType type);
// Whitespace-free form used inside BIO tags, e.g. "creative-work".
std::string_view tag_name(NeType type);
// Accepts the display name, the tag name, '_' separators and the
// "organization" spelling.
std::optional<NeType> parse_ne_type(std::string_view text);
NeType parse_ne_type_or_throw(std::string_view text);

struct TypedMention {
  std::string surface;
  NeType type = NeType::kPerson;
  std::string source;

  friend bool operator==(const TypedMention&, const TypedMention&) = default;
};

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string_view trim(std::string_view text);
// Collapses whitespace runs to single spaces and trims both ends.
std::string normalize_whitespace(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);
// ASCII lowercase; bytes >= 0x80 are left untouched.
std::string ascii_lower(std::string_view text);
std::string ascii_upper(std::string_view text);
// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD.
std::u32string utf8_decode(std::string_view text);

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

// Platform-stable generator. std::mt19937_64 output is fully specified by the
// standard but the distributions are not, so bounded integers and shuffles
// are derived here from raw engine output only.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, bound). bound must be positive.
  std::size_t uniform_index(std::size_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed for a named stage of a seeded run.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

// ---------------------------------------------------------------------------
// Bounded worker pool
// ---------------------------------------------------------------------------

template <typename R>
struct ItemOutcome {
  std::optional<R> value;
  std::string error;
  std::optional<ErrorKind> error_kind;

  bool ok() const { return value.has_value(); }
};

// One item that failed inside a batch run; batches record these and carry on.
struct ItemFailure {
  std::size_t index = 0;
  std::string item;
  std::string message;
  std::optional<ErrorKind> kind;
};

// Applies `fn` to every index in [0, count) using at most `workers` threads.
// Results are returned in index order; an exception thrown for one item is
// captured in its outcome and does not stop the others.
template <typename R>
std::vector<ItemOutcome<R>> parallel_map(std::size_t count, std::size_t workers,
                                         const std::function<R(std::size_t)>& fn) {
  std::vector<ItemOutcome<R>> out(count);
  auto run_one = [&](std::size_t i) {
    try {
      out[i].value.emplace(fn(i));
    } catch (const Error& e) {
      out[i].error = e.what();
      out[i].error_kind = e.kind();
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) run_one(i);
    });
  }
  pool.clear();  // joins
  return out;
}

}  // namespace nerprobe

#endif  // NERPROBE_COMMON_HPP_
